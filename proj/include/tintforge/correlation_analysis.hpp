#pragma once

// Alignment between color-space distances and text-embedding distances of
// the eleven basic color terms, measured with Spearman's rank correlation
// overall and within each hue group.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tintforge/color_vocab.hpp"
#include "tintforge/colorspace.hpp"
#include "tintforge/distance_matrix.hpp"
#include "tintforge/embedding_store.hpp"
#include "tintforge/error.hpp"

namespace tintforge {

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

/// Spearman's rho as the Pearson correlation of average ranks. Returns
/// nullopt when either input has no rank variance.
inline std::optional<double> try_spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw input_error("spearman: length mismatch");
  if (x.size() < 2) throw input_error("spearman: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rho = try_spearman_rho(x, y);
  if (!rho) throw input_error("spearman: zero rank variance, rho is undefined");
  return *rho;
}

inline DistanceMatrix embedding_distance_matrix(const EmbeddingStore& store,
                                                std::span<const std::string> names,
                                                EmbeddingMetric metric = EmbeddingMetric::Cosine) {
  for (const auto& n : names)
    if (!store.contains(n)) throw input_error("embedding store has no entry '" + n + "'");
  DistanceMatrix m(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      m.set_symmetric(i, j, embedding_distance(store.lookup(names[i]), store.lookup(names[j]), metric));
  return m;
}

struct PairCounts {
  std::size_t overall = 0;
  std::size_t warm = 0;
  std::size_t neutral = 0;
  std::size_t cool = 0;
};

struct CorrelationReport {
  ColorSpace space = ColorSpace::Lab;
  std::optional<double> rho_overall;     // pooled over all term pairs
  std::optional<double> rho_warm;
  std::optional<double> rho_neutral;
  std::optional<double> rho_cool;
  std::optional<double> rho_group_mean;  // mean of the available group-wise values
  PairCounts pair_count;
  DistanceMatrix color_distances;
};

struct CorrelationStudy {
  std::vector<std::string> terms;  // basic terms, alphabetical
  EmbeddingMetric metric = EmbeddingMetric::Cosine;
  DistanceMatrix embedding_distances;
  std::vector<CorrelationReport> reports;
};

namespace detail {

// Group-wise rho needs at least this many pairs.
inline constexpr std::size_t kMinPairsForRho = 3;

struct PairSet {
  std::vector<double> color;
  std::vector<double> embedding;
};

inline PairSet collect_pairs(const DistanceMatrix& color, const DistanceMatrix& embedding,
                             std::span<const std::size_t> members) {
  PairSet out;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      out.color.push_back(color(members[a], members[b]));
      out.embedding.push_back(embedding(members[a], members[b]));
    }
  return out;
}

inline std::optional<double> rho_of(const PairSet& pairs) {
  if (pairs.color.size() < kMinPairsForRho) return std::nullopt;
  return try_spearman_rho(pairs.color, pairs.embedding);
}

}  // namespace detail

/// Correlates each requested color space's basic-term distance matrix with
/// the embedding distance matrix of the same terms.
inline CorrelationStudy run_correlation_study(const EmbeddingStore& store, const BasicPalette& palette,
                                              std::span<const ColorSpace> spaces,
                                              EmbeddingMetric metric = EmbeddingMetric::Cosine) {
  if (palette.empty()) throw input_error("basic palette is empty");
  CorrelationStudy study;
  study.metric = metric;
  std::vector<SrgbColor> colors;
  std::vector<std::size_t> all, warm, neutral, cool;
  for (const auto& b : palette.colors()) {
    const std::size_t idx = study.terms.size();
    study.terms.push_back(b.name);
    colors.push_back(b.srgb);
    all.push_back(idx);
    (b.group == HueGroup::Warm ? warm : b.group == HueGroup::Cool ? cool : neutral).push_back(idx);
  }
  study.embedding_distances = embedding_distance_matrix(store, study.terms, metric);

  auto choose2 = [](std::size_t n) { return n * (n > 0 ? n - 1 : 0) / 2; };
  for (ColorSpace space : spaces) {
    CorrelationReport r;
    r.space = space;
    r.color_distances = pairwise_distance_matrix(space, std::span<const SrgbColor>(colors));
    const auto& e = study.embedding_distances;
    r.rho_overall = detail::rho_of(detail::collect_pairs(r.color_distances, e, all));
    r.rho_warm = detail::rho_of(detail::collect_pairs(r.color_distances, e, warm));
    r.rho_neutral = detail::rho_of(detail::collect_pairs(r.color_distances, e, neutral));
    r.rho_cool = detail::rho_of(detail::collect_pairs(r.color_distances, e, cool));
    r.pair_count = {choose2(all.size()), choose2(warm.size()), choose2(neutral.size()),
                    choose2(cool.size())};
    double sum = 0.0;
    int n = 0;
    for (const auto& g : {r.rho_warm, r.rho_neutral, r.rho_cool})
      if (g) {
        sum += *g;
        ++n;
      }
    if (n > 0) r.rho_group_mean = sum / n;
    study.reports.push_back(std::move(r));
  }
  return study;
}

inline nlohmann::ordered_json to_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const CorrelationStudy& study) {
  nlohmann::ordered_json j;
  j["terms"] = study.terms;
  j["metric"] = to_string(study.metric);
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : study.reports) {
    nlohmann::ordered_json rj;
    rj["space"] = to_string(r.space);
    rj["rho_overall"] = to_json(r.rho_overall);
    rj["rho_warm"] = to_json(r.rho_warm);
    rj["rho_neutral"] = to_json(r.rho_neutral);
    rj["rho_cool"] = to_json(r.rho_cool);
    rj["rho_group_mean"] = to_json(r.rho_group_mean);
    rj["pair_count"] = {{"overall", r.pair_count.overall},
                        {"warm", r.pair_count.warm},
                        {"neutral", r.pair_count.neutral},
                        {"cool", r.pair_count.cool}};
    j["reports"].push_back(std::move(rj));
  }
  return j;
}

/// Square matrix as CSV with a header row and a leading name column.
inline void write_matrix_csv(std::ostream& out, const DistanceMatrix& m, std::span<const std::string> names) {
  out << "term";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace tintforge
