#pragma once

// End-to-end color pipeline for one prompt: disambiguate, classify each
// resolved color into its hue group, retrieve the nearest basic anchors in
// that group, blend their embeddings, and plan which prompt tokens receive
// the blended target. An optional demo stage runs binding guidance on a
// synthetic attention provider. The result is a JSON trace.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tintforge/binding_guidance.hpp"
#include "tintforge/color_vocab.hpp"
#include "tintforge/disambiguation.hpp"
#include "tintforge/embedding_store.hpp"
#include "tintforge/error.hpp"

namespace tintforge {

struct PipelineConfig {
  std::filesystem::path basics_path;
  std::filesystem::path vocab_path;
  std::filesystem::path store_path;
  double sigma = 20.0;
  std::size_t k = 3;
  double binding_scale = kDefaultBindingScale;
  EmbeddingMetric metric = EmbeddingMetric::Cosine;
  SpanPolicy span_policy = SpanPolicy::WholeSpan;
  bool offline = true;
  LlmConfig llm;
  std::uint64_t seed = 7;
  int guide_steps = 0;

  void validate() const {
    if (!(sigma > 0.0)) throw input_error("sigma must be positive");
    if (k < 1) throw input_error("k must be at least 1");
    if (!(binding_scale >= 0.0)) throw input_error("binding scale must be >= 0");
    if (guide_steps < 0) throw input_error("guide steps must be >= 0");
  }
};

class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), "stage '" + stage + "': " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

inline std::string checksum_hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Everything one color contributes to the trace.
struct ColorPlan {
  ColorAnalysis analysis;
  HueClassification classification;
  std::vector<RankedAnchor> anchors;
  std::vector<double> weights;
  Vector target;
  CharRange rewritten_chars;
  TokenRange rewritten_tokens;
  std::optional<std::size_t> entity_token;
};

struct PipelineResult {
  DisambiguationResult disambiguation;
  std::vector<ColorPlan> colors;
  std::vector<BindingPair> binding_pairs;
  std::optional<GuidanceRun> guidance;
  nlohmann::ordered_json trace;
};

namespace detail {

// Character ranges of each rewritten fragment inside the rewritten prompt.
inline std::vector<CharRange> rewritten_ranges(const DisambiguationResult& r) {
  std::vector<CharRange> out;
  std::ptrdiff_t shift = 0;
  for (const auto& a : r.analyses) {
    const auto begin = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(a.chars.begin) + shift);
    out.push_back({begin, begin + a.rewritten_fragment.size()});
    shift += static_cast<std::ptrdiff_t>(a.rewritten_fragment.size()) - static_cast<std::ptrdiff_t>(a.chars.size());
  }
  return out;
}

inline std::optional<std::size_t> next_word_token(std::string_view text, std::size_t after_token) {
  const auto tokens = tokenize(text);
  for (std::size_t i = after_token; i < tokens.size(); ++i)
    if (tokens[i].is_word) return i;
  return std::nullopt;
}

inline nlohmann::ordered_json opt_json(const std::optional<std::size_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline PipelineResult run_pipeline(std::string_view prompt, const PipelineConfig& config,
                                   ChatTransport* transport = nullptr) {
  run_stage("config", [&] { config.validate(); });
  if (trim(prompt).empty()) throw StageError("input", input_error("prompt is empty"));

  const Vocabulary vocab = run_stage("vocab", [&] { return load_vocab(config.vocab_path, config.basics_path); });

  PipelineResult out;
  out.disambiguation = run_stage("disambiguate", [&] {
    if (config.offline) return disambiguate_offline(prompt, vocab);
    if (transport == nullptr) throw input_error("online disambiguation needs a chat transport");
    return disambiguate_llm(prompt, *transport, config.llm);
  });

  const auto& dis = out.disambiguation;
  const auto ranges = detail::rewritten_ranges(dis);
  std::optional<EmbeddingStore> store;
  for (std::size_t i = 0; i < dis.analyses.size(); ++i) {
    const auto& a = dis.analyses[i];
    if (!a.reference_rgb) continue;
    ColorPlan plan;
    plan.analysis = a;
    plan.classification = run_stage("classify", [&] { return classify_hue_group(vocab.basics(), *a.reference_rgb); });
    plan.anchors = run_stage("retrieve", [&] { return topk_basic_in_group(vocab.basics(), *a.reference_rgb, config.k); });
    run_stage("blend", [&] {
      if (!store) store = load_store(config.store_path);
      BlendSpec spec;
      spec.sigma = config.sigma;
      for (const auto& r : plan.anchors) spec.anchors.push_back({r.anchor.name, r.delta_e});
      plan.weights = gaussian_weights(spec);
      plan.target = blend_target(*store, spec);
    });
    run_stage("refine", [&] {
      plan.rewritten_chars = ranges[i];
      plan.rewritten_tokens = detail::tokens_covering(dis.rewritten_prompt, ranges[i]);
      if (plan.rewritten_tokens.count == 0) throw input_error("rewritten fragment for '" + a.term + "' is empty");
      plan.entity_token = detail::next_word_token(dis.rewritten_prompt, plan.rewritten_tokens.end());
    });
    if (plan.entity_token) out.binding_pairs.push_back({plan.rewritten_tokens.first, *plan.entity_token});
    out.colors.push_back(std::move(plan));
  }

  if (config.guide_steps > 0 && !out.binding_pairs.empty()) {
    out.guidance = run_stage("guide", [&] {
      const SyntheticAttentionProvider provider(config.seed, 16, 8, 8, out.binding_pairs.size());
      const auto pairs = provider.default_pairs();
      return run_guidance(SyntheticAttentionProvider::initial_latent(config.seed, 16), provider, pairs,
                          config.binding_scale, config.guide_steps);
    });
  }

  auto& t = out.trace;
  t["prompt"] = std::string(prompt);
  t["mode"] = config.offline ? "offline" : "llm";
  t["disambiguation"] = to_json(dis);
  t["colors"] = nlohmann::ordered_json::array();
  for (const auto& c : out.colors) {
    nlohmann::ordered_json cj;
    cj["term"] = c.analysis.term;
    cj["basic"] = c.analysis.basic_term ? nlohmann::ordered_json(*c.analysis.basic_term) : nlohmann::ordered_json(nullptr);
    cj["hex"] = to_hex(*c.analysis.reference_rgb);
    cj["hue_group"] = to_string(c.classification.group);
    cj["nearest_basic"] = {{"name", c.classification.nearest.name}, {"delta_e", c.classification.delta_e}};
    cj["anchors"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.anchors.size(); ++i)
      cj["anchors"].push_back(
          {{"name", c.anchors[i].anchor.name}, {"delta_e", c.anchors[i].delta_e}, {"weight", c.weights[i]}});
    cj["sigma"] = config.sigma;
    cj["target"] = {{"dim", c.target.size()},
                    {"checksum", checksum_hex(vector_checksum(c.target))},
                    {"nearest_entry", nearest_entry(*store, c.target, config.metric)},
                    {"metric", to_string(config.metric)}};
    cj["token_plan"] = {{"tokens", {c.rewritten_tokens.first, c.rewritten_tokens.end()}},
                        {"chars", {c.rewritten_chars.begin, c.rewritten_chars.end}},
                        {"policy", config.span_policy == SpanPolicy::WholeSpan ? "whole-span" : "first-token"},
                        {"entity_token", detail::opt_json(c.entity_token)}};
    t["colors"].push_back(std::move(cj));
  }
  t["binding_pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : out.binding_pairs) t["binding_pairs"].push_back({p.color_token, p.entity_token});
  if (out.guidance) {
    nlohmann::ordered_json g;
    g["provider"] = "synthetic";
    g["binding_scale"] = config.binding_scale;
    g["steps"] = config.guide_steps;
    g["initial_loss"] = out.guidance->trace.front().loss;
    g["final_loss"] = out.guidance->trace.back().loss;
    t["guidance"] = std::move(g);
  }
  return out;
}

}  // namespace tintforge
