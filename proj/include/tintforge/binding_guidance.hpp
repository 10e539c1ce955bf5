#pragma once

// Color-binding guidance: symmetric KL divergence between the cross-attention
// maps of each color token and its entity token, and the latent update that
// descends the summed loss.
//
// Attention comes from an AttentionProvider. Providers that can
// back-propagate map gradients to the latent get an analytic gradient; any
// other provider falls back to central differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tintforge/error.hpp"
#include "tintforge/rng.hpp"

namespace tintforge {

/// Non-negative map over rows x cols spatial positions summing to 1.
class AttentionMap {
 public:
  static constexpr double kNormTolerance = 1e-9;

  AttentionMap() = default;
  AttentionMap(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows == 0 || cols == 0) throw input_error("attention map must have positive shape");
    if (values_.size() != rows * cols) throw input_error("attention map size does not match shape");
    double sum = 0.0;
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw input_error("attention entries must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTolerance) throw input_error("attention map must sum to 1");
  }

  /// Normalizes arbitrary non-negative weights.
  static AttentionMap from_weights(std::size_t rows, std::size_t cols, std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (!(sum > 0.0)) throw input_error("attention weights must have positive mass");
    for (double& w : weights) w /= sum;
    return AttentionMap(rows, cols, std::move(weights));
  }

  static AttentionMap uniform(std::size_t rows, std::size_t cols) {
    return AttentionMap(rows, cols, std::vector<double>(rows * cols, 1.0 / static_cast<double>(rows * cols)));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool same_shape(const AttentionMap& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Mixing weight with the uniform map applied before taking logs.
inline constexpr double kDefaultSmoothing = 1e-8;

inline double smoothed(double v, std::size_t n, double eps) {
  return (1.0 - eps) * v + eps / static_cast<double>(n);
}

inline double kl_divergence(const AttentionMap& p, const AttentionMap& q, double eps = kDefaultSmoothing) {
  if (!p.same_shape(q)) throw input_error("kl_divergence: attention map shapes differ");
  const std::size_t n = p.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ps = smoothed(p[i], n, eps);
    const double qs = smoothed(q[i], n, eps);
    sum += ps * std::log(ps / qs);
  }
  return std::max(sum, 0.0);
}

inline double symmetric_kl(const AttentionMap& a, const AttentionMap& b, double eps = kDefaultSmoothing) {
  return 0.5 * kl_divergence(a, b, eps) + 0.5 * kl_divergence(b, a, eps);
}

struct MapPair {
  AttentionMap color;
  AttentionMap entity;
};

struct BindingLoss {
  double total = 0.0;
  std::vector<double> per_pair;
};

inline BindingLoss binding_loss(std::span<const MapPair> pairs, double eps = kDefaultSmoothing) {
  BindingLoss out;
  for (const auto& p : pairs) {
    out.per_pair.push_back(symmetric_kl(p.color, p.entity, eps));
    out.total += out.per_pair.back();
  }
  return out;
}

struct MapPairGradient {
  std::vector<double> color;
  std::vector<double> entity;
};

/// Gradient of the symmetric KL of one pair with respect to the raw
/// (unsmoothed) entries of both maps.
inline MapPairGradient symmetric_kl_gradient(const AttentionMap& a, const AttentionMap& b,
                                             double eps = kDefaultSmoothing) {
  if (!a.same_shape(b)) throw input_error("symmetric_kl_gradient: attention map shapes differ");
  const std::size_t n = a.size();
  MapPairGradient g{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double as = smoothed(a[i], n, eps);
    const double bs = smoothed(b[i], n, eps);
    const double log_ratio = std::log(as / bs);
    g.color[i] = (1.0 - eps) * 0.5 * (log_ratio + 1.0 - bs / as);
    g.entity[i] = (1.0 - eps) * 0.5 * (-log_ratio + 1.0 - as / bs);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Latents and providers

struct BindingPair {
  std::size_t color_token = 0;
  std::size_t entity_token = 1;
};

inline void validate_pairs(std::span<const BindingPair> pairs, std::size_t token_count) {
  for (const auto& p : pairs) {
    if (p.color_token == p.entity_token) throw input_error("binding pair indices must differ");
    if (p.color_token >= token_count || p.entity_token >= token_count)
      throw input_error("binding pair index out of range");
  }
}

struct LatentState {
  std::vector<double> x;
  int step = 0;
};

/// Source of cross-attention maps. evaluate() must be deterministic in x and
/// safe to call concurrently.
class AttentionProvider {
 public:
  virtual ~AttentionProvider() = default;
  virtual std::size_t latent_dim() const = 0;
  virtual std::size_t token_count() const = 0;
  virtual std::vector<MapPair> evaluate(const LatentState& x, std::span<const BindingPair> pairs) const = 0;
};

/// A provider that can map per-entry gradients of its maps back to dL/dx.
class DifferentiableAttentionProvider : public AttentionProvider {
 public:
  virtual std::vector<double> backpropagate(const LatentState& x, std::span<const BindingPair> pairs,
                                            std::span<const MapPairGradient> map_gradients) const = 0;
};

struct GuidanceOptions {
  double smoothing = kDefaultSmoothing;
  double fd_step = 1e-5;      // central-difference step for non-differentiable providers
  bool force_numeric = false;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
  bool analytic = false;
};

inline double binding_loss_at(const LatentState& x, const AttentionProvider& provider,
                              std::span<const BindingPair> pairs, double eps = kDefaultSmoothing) {
  return binding_loss(provider.evaluate(x, pairs), eps).total;
}

inline std::vector<double> numeric_gradient(const LatentState& x, const AttentionProvider& provider,
                                            std::span<const BindingPair> pairs, double h,
                                            double eps = kDefaultSmoothing) {
  std::vector<double> g(x.x.size());
  LatentState probe = x;
  for (std::size_t i = 0; i < x.x.size(); ++i) {
    probe.x[i] = x.x[i] + h;
    const double up = binding_loss_at(probe, provider, pairs, eps);
    probe.x[i] = x.x[i] - h;
    const double down = binding_loss_at(probe, provider, pairs, eps);
    probe.x[i] = x.x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline LossAndGradient binding_loss_and_gradient(const LatentState& x, const AttentionProvider& provider,
                                                 std::span<const BindingPair> pairs,
                                                 const GuidanceOptions& options = {}) {
  if (x.x.size() != provider.latent_dim()) throw input_error("latent dimension does not match provider");
  validate_pairs(pairs, provider.token_count());
  LossAndGradient out;
  const auto maps = provider.evaluate(x, pairs);
  out.loss = binding_loss(maps, options.smoothing).total;
  const auto* diff = dynamic_cast<const DifferentiableAttentionProvider*>(&provider);
  if (diff != nullptr && !options.force_numeric) {
    std::vector<MapPairGradient> grads;
    grads.reserve(maps.size());
    for (const auto& m : maps) grads.push_back(symmetric_kl_gradient(m.color, m.entity, options.smoothing));
    out.gradient = diff->backpropagate(x, pairs, grads);
    out.analytic = true;
  } else {
    out.gradient = numeric_gradient(x, provider, pairs, options.fd_step, options.smoothing);
  }
  for (std::size_t i = 0; i < out.gradient.size(); ++i)
    if (!std::isfinite(out.gradient[i]))
      throw input_error("non-finite binding gradient at component " + std::to_string(i) +
                        " (loss " + std::to_string(out.loss) + ")");
  return out;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double d : v) s += d * d;
  return std::sqrt(s);
}

/// Default binding scale. Not derived from any reference run; O(10) is the
/// usual range for attention-guidance scales.
inline constexpr double kDefaultBindingScale = 20.0;

/// x <- x - alpha * grad_x Σ L_binding. Advances the step counter.
inline LatentState binding_step(const LatentState& x, const AttentionProvider& provider,
                                std::span<const BindingPair> pairs, double alpha,
                                const GuidanceOptions& options = {}) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw input_error("binding scale must be finite and >= 0");
  const auto lg = binding_loss_and_gradient(x, provider, pairs, options);
  LatentState next = x;
  for (std::size_t i = 0; i < next.x.size(); ++i) next.x[i] -= alpha * lg.gradient[i];
  ++next.step;
  return next;
}

struct GuidanceTraceRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct GuidanceRun {
  std::vector<GuidanceTraceRow> trace;  // one row per visited state, steps + 1 rows
  LatentState final_state;
};

inline GuidanceRun run_guidance(LatentState x, const AttentionProvider& provider,
                                std::span<const BindingPair> pairs, double alpha, int steps,
                                const GuidanceOptions& options = {}) {
  if (steps < 0) throw input_error("step count must be non-negative");
  GuidanceRun run;
  for (int s = 0;; ++s) {
    const auto lg = binding_loss_and_gradient(x, provider, pairs, options);
    run.trace.push_back({x.step, lg.loss, l2_norm(lg.gradient)});
    if (s == steps) break;
    for (std::size_t i = 0; i < x.x.size(); ++i) x.x[i] -= alpha * lg.gradient[i];
    ++x.step;
  }
  run.final_state = std::move(x);
  return run;
}

// ---------------------------------------------------------------------------
// Synthetic provider

/// Stand-in for UNet cross-attention: each token's map is
/// softmax(W_tᵀ x + b_t) over rows x cols positions, with W_t and b_t drawn
/// once from a seeded normal distribution. Token 2i is the color token and
/// token 2i+1 the entity token of default pair i.
class SyntheticAttentionProvider final : public DifferentiableAttentionProvider {
 public:
  SyntheticAttentionProvider(std::uint64_t seed, std::size_t latent_dim, std::size_t rows,
                             std::size_t cols, std::size_t n_pairs)
      : dim_(latent_dim), rows_(rows), cols_(cols), tokens_(2 * n_pairs) {
    if (latent_dim == 0 || rows == 0 || cols == 0 || n_pairs == 0)
      throw input_error("synthetic provider dimensions must be positive");
    auto engine = rng::make_engine(seed, 0x5EED);
    const std::size_t cells = rows * cols;
    const double w_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
    weights_.resize(tokens_ * latent_dim * cells);
    bias_.resize(tokens_ * cells);
    for (auto& w : weights_) w = w_scale * rng::standard_normal(engine);
    for (auto& b : bias_) b = rng::standard_normal(engine);
  }

  std::size_t latent_dim() const override { return dim_; }
  std::size_t token_count() const override { return tokens_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::vector<BindingPair> default_pairs() const {
    std::vector<BindingPair> pairs;
    for (std::size_t i = 0; i < tokens_ / 2; ++i) pairs.push_back({2 * i, 2 * i + 1});
    return pairs;
  }

  /// Deterministic starting latent drawn from N(0, 1).
  static LatentState initial_latent(std::uint64_t seed, std::size_t latent_dim) {
    auto engine = rng::make_engine(seed, 0x1A7E);
    LatentState x;
    x.x.resize(latent_dim);
    for (auto& v : x.x) v = rng::standard_normal(engine);
    return x;
  }

  std::vector<double> logits(const LatentState& x, std::size_t token) const {
    check(x, token);
    const std::size_t cells = rows_ * cols_;
    std::vector<double> z(bias_.begin() + token * cells, bias_.begin() + (token + 1) * cells);
    for (std::size_t d = 0; d < dim_; ++d) {
      const double* row = weight_row(token, d);
      for (std::size_t j = 0; j < cells; ++j) z[j] += row[j] * x.x[d];
    }
    return z;
  }

  AttentionMap token_map(const LatentState& x, std::size_t token) const {
    auto z = logits(x, token);
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - peak);
      sum += v;
    }
    for (double& v : z) v /= sum;
    return AttentionMap(rows_, cols_, std::move(z));
  }

  /// d map_j / d x_d, row-major over (j, d).
  std::vector<double> token_map_jacobian(const LatentState& x, std::size_t token) const {
    const auto a = token_map(x, token);
    const std::size_t cells = a.size();
    std::vector<double> jac(cells * dim_, 0.0);
    for (std::size_t d = 0; d < dim_; ++d) {
      const double* row = weight_row(token, d);
      double mean_w = 0.0;
      for (std::size_t k = 0; k < cells; ++k) mean_w += a[k] * row[k];
      for (std::size_t j = 0; j < cells; ++j) jac[j * dim_ + d] = a[j] * (row[j] - mean_w);
    }
    return jac;
  }

  std::vector<MapPair> evaluate(const LatentState& x, std::span<const BindingPair> pairs) const override {
    validate_pairs(pairs, tokens_);
    std::vector<MapPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back({token_map(x, p.color_token), token_map(x, p.entity_token)});
    return out;
  }

  std::vector<double> backpropagate(const LatentState& x, std::span<const BindingPair> pairs,
                                    std::span<const MapPairGradient> map_gradients) const override {
    if (map_gradients.size() != pairs.size()) throw input_error("one map gradient per pair expected");
    std::vector<double> grad(dim_, 0.0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      accumulate(x, pairs[i].color_token, map_gradients[i].color, grad);
      accumulate(x, pairs[i].entity_token, map_gradients[i].entity, grad);
    }
    return grad;
  }

 private:
  void check(const LatentState& x, std::size_t token) const {
    if (x.x.size() != dim_) throw input_error("latent dimension does not match provider");
    if (token >= tokens_) throw input_error("token index out of range");
  }

  const double* weight_row(std::size_t token, std::size_t d) const {
    return weights_.data() + (token * dim_ + d) * rows_ * cols_;
  }

  // grad += Wᵀ-chain of softmax: dL/dz_j = a_j (g_j - Σ_k a_k g_k).
  void accumulate(const LatentState& x, std::size_t token, std::span<const double> map_grad,
                  std::vector<double>& grad) const {
    const auto a = token_map(x, token);
    const std::size_t cells = a.size();
    double mean_g = 0.0;
    for (std::size_t k = 0; k < cells; ++k) mean_g += a[k] * map_grad[k];
    std::vector<double> dz(cells);
    for (std::size_t j = 0; j < cells; ++j) dz[j] = a[j] * (map_grad[j] - mean_g);
    for (std::size_t d = 0; d < dim_; ++d) {
      const double* row = weight_row(token, d);
      double s = 0.0;
      for (std::size_t j = 0; j < cells; ++j) s += row[j] * dz[j];
      grad[d] += s;
    }
  }

  std::size_t dim_;
  std::size_t rows_;
  std::size_t cols_;
  std::size_t tokens_;
  std::vector<double> weights_;  // [token][d][cell]
  std::vector<double> bias_;     // [token][cell]
};

}  // namespace tintforge
