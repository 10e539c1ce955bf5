#pragma once

// Benchmark construction from a caption corpus: keep captions that mention
// basic color terms, split them into single- and multi-color groups, cluster
// each group, sample per cluster, and expand every sampled caption into
// prompts whose basic terms are replaced by compound color names.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "tintforge/color_vocab.hpp"
#include "tintforge/disambiguation.hpp"
#include "tintforge/embedding_store.hpp"
#include "tintforge/error.hpp"
#include "tintforge/kmeans.hpp"
#include "tintforge/rng.hpp"
#include "tintforge/text.hpp"

namespace tintforge {

struct Caption {
  std::string id;
  std::string text;
  std::optional<Vector> embedding;
};

enum class ColorGroup { Single, Multi };

inline std::string_view to_string(ColorGroup g) { return g == ColorGroup::Single ? "single" : "multi"; }

/// JSON lines of {"id": ..., "caption": ...}. Numeric ids are accepted and
/// kept in their decimal form.
inline std::vector<Caption> parse_captions_jsonl(std::istream& in, const std::string& source = "captions") {
  std::vector<Caption> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(source, line_no, "not a JSON object");
    Caption c;
    if (!j.contains("id")) throw ParseError(source, line_no, "missing 'id'");
    if (j["id"].is_string()) c.id = j["id"].get<std::string>();
    else if (j["id"].is_number_integer()) c.id = std::to_string(j["id"].get<long long>());
    else throw ParseError(source, line_no, "'id' must be a string or integer");
    if (!j.contains("caption") || !j["caption"].is_string()) throw ParseError(source, line_no, "missing string 'caption'");
    c.text = j["caption"].get<std::string>();
    if (trim(c.text).empty()) throw ParseError(source, line_no, "empty caption");
    if (!seen.insert(c.id).second) throw ParseError(source, line_no, "duplicate id '" + c.id + "'");
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<Caption> load_captions_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open captions '" + path.string() + "'");
  return parse_captions_jsonl(in, path.string());
}

// ---------------------------------------------------------------------------
// Filtering

struct FilterStats {
  std::size_t total = 0;
  std::size_t single = 0;
  std::size_t multi = 0;
  std::size_t dropped = 0;

  double retained_fraction() const {
    return total == 0 ? 0.0 : static_cast<double>(single + multi) / static_cast<double>(total);
  }
};

struct FilteredCaptions {
  std::vector<Caption> single;
  std::vector<Caption> multi;
  FilterStats stats;
};

/// Partitions by the number of basic color term occurrences: one goes to the
/// single group, two or more to the multi group, none is dropped.
inline FilteredCaptions filter_color_captions(std::span<const Caption> captions,
                                              const Lexicon& basics = Lexicon::basics_only()) {
  FilteredCaptions out;
  out.stats.total = captions.size();
  for (const auto& c : captions) {
    const auto n = detect_color_terms(c.text, basics).size();
    if (n == 0) ++out.stats.dropped;
    else if (n == 1) out.single.push_back(c);
    else out.multi.push_back(c);
  }
  out.stats.single = out.single.size();
  out.stats.multi = out.multi.size();
  return out;
}

// ---------------------------------------------------------------------------
// Features

/// L2-normalized TF-IDF vectors over word tokens, color words excluded. The
/// feature set is the max_features words with the highest document
/// frequency, ties alphabetical. idf = ln((1 + N) / (1 + df)) + 1.
inline std::vector<Point> tfidf_features(std::span<const Caption> captions, const Lexicon& excluded,
                                         std::size_t max_features = 1024) {
  std::vector<std::vector<std::string>> docs;
  std::map<std::string, std::size_t> df;
  for (const auto& c : captions) {
    std::vector<std::string> words;
    for (const auto& t : tokenize(c.text)) {
      if (!t.is_word) continue;
      std::string key = to_lower(t.text);
      if (excluded.find({key}) != nullptr) continue;
      words.push_back(std::move(key));
    }
    for (const auto& w : std::set<std::string>(words.begin(), words.end())) ++df[w];
    docs.push_back(std::move(words));
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_features) ranked.resize(max_features);
  std::sort(ranked.begin(), ranked.end());
  std::map<std::string, std::size_t> column;
  std::vector<double> idf;
  const double n = static_cast<double>(captions.size());
  for (const auto& [word, count] : ranked) {
    column.emplace(word, idf.size());
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  std::vector<Point> out;
  out.reserve(docs.size());
  for (const auto& words : docs) {
    Point v(std::max<std::size_t>(idf.size(), 1), 0.0);
    for (const auto& w : words)
      if (auto it = column.find(w); it != column.end()) v[it->second] += idf[it->second];
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0)
      for (double& x : v) x /= std::sqrt(norm);
    out.push_back(std::move(v));
  }
  return out;
}

/// Clustering features: precomputed vectors keyed by caption id when a store
/// is given, otherwise TF-IDF.
inline std::vector<Point> caption_features(std::span<const Caption> captions, const EmbeddingStore* store,
                                           const Lexicon& excluded, std::size_t max_features = 1024) {
  if (store == nullptr) return tfidf_features(captions, excluded, max_features);
  std::vector<Point> out;
  out.reserve(captions.size());
  for (const auto& c : captions) {
    if (c.embedding) {
      out.push_back(*c.embedding);
      continue;
    }
    if (!store->contains(c.id)) throw input_error("embedding file has no vector for caption '" + c.id + "'");
    out.push_back(store->vector(c.id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

struct Substitution {
  std::string from;  // basic term as written in the caption
  std::string to;    // compound name as written in the prompt
  std::string anchor;
  CompoundCategory category = CompoundCategory::Blended;
  std::string hex;
  bool fallback = false;  // sampled category had no compound for this anchor
  CharRange chars;        // position of `to` in the prompt
};

struct BenchPrompt {
  std::string id;
  std::string source_id;
  std::string prompt;
  ColorGroup group = ColorGroup::Single;
  std::vector<Substitution> substitutions;
};

namespace detail {

inline std::string match_capitalization(std::string_view original, std::string replacement) {
  if (!original.empty() && !replacement.empty() && std::isupper(static_cast<unsigned char>(original.front())))
    replacement.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement.front())));
  return replacement;
}

inline std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Expands each caption into `expansions` prompts. Every basic term is
/// replaced independently: a category is drawn uniformly from the five, then
/// a compound uniformly among those with that category and anchor. Captions
/// and expansions are processed in order from one engine.
inline std::vector<BenchPrompt> substitute_compounds(std::span<const Caption> captions, ColorGroup group,
                                                     const Vocabulary& vocab, std::size_t expansions,
                                                     std::uint64_t seed) {
  if (expansions < 1) throw input_error("expansions must be at least 1");
  const Lexicon basics = Lexicon::basics_only();
  auto engine = rng::make_engine(seed, 0x5B57u);
  std::vector<BenchPrompt> out;
  for (const auto& caption : captions) {
    const auto terms = detect_color_terms(caption.text, basics);
    if (terms.empty()) throw input_error("caption '" + caption.id + "' has no basic color term");
    for (std::size_t e = 0; e < expansions; ++e) {
      BenchPrompt p;
      p.id = caption.id + "-" + std::to_string(e + 1);
      p.source_id = caption.id;
      p.group = group;
      std::size_t pos = 0;
      for (const auto& t : terms) {
        const auto category = kAllCategories[rng::uniform_index(engine, kAllCategories.size())];
        auto candidates = vocab.compounds_for(t.canonical, category);
        bool fallback = false;
        if (candidates.empty()) {
          candidates = vocab.compounds_for(t.canonical);
          fallback = true;
        }
        if (candidates.empty()) throw input_error("no compound color anchored to '" + t.canonical + "'");
        const CompoundColor& c = *candidates[rng::uniform_index(engine, candidates.size())];
        p.prompt.append(caption.text, pos, t.chars.begin - pos);
        const std::string written = detail::match_capitalization(t.term, c.name);
        const std::size_t at = p.prompt.size();
        p.prompt += written;
        p.substitutions.push_back({t.term, written, c.basic_anchor, c.category, c.hex, fallback,
                                   {at, at + written.size()}});
        pos = t.chars.end;
      }
      p.prompt.append(caption.text, pos);
      out.push_back(std::move(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full build

struct BenchConfig {
  std::size_t k = 20;
  std::size_t per_cluster = 5;
  std::size_t expansions = 5;
  std::uint64_t seed = 42;
  int max_iters = 100;
  int restarts = 32;
  std::size_t max_features = 1024;
};

struct GroupBuild {
  ColorGroup group = ColorGroup::Single;
  KMeansResult clustering;
  std::vector<std::string> sampled_ids;
  std::vector<BenchPrompt> prompts;
};

struct BenchBuild {
  FilterStats stats;
  GroupBuild single;
  GroupBuild multi;
};

inline GroupBuild build_group(std::span<const Caption> captions, ColorGroup group, const Vocabulary& vocab,
                              const BenchConfig& config, const EmbeddingStore* store) {
  GroupBuild g;
  g.group = group;
  const std::uint64_t tag = group == ColorGroup::Single ? 1 : 2;
  const auto features = caption_features(captions, store, Lexicon(vocab), config.max_features);
  g.clustering = kmeans(features, config.k, detail::stage_seed(config.seed, tag * 16 + 1), config.max_iters,
                        config.restarts);
  const auto picked =
      sample_per_cluster(g.clustering.assignments, config.per_cluster, detail::stage_seed(config.seed, tag * 16 + 2));
  std::vector<Caption> sampled;
  for (auto i : picked) {
    sampled.push_back(captions[i]);
    g.sampled_ids.push_back(captions[i].id);
  }
  g.prompts = substitute_compounds(sampled, group, vocab, config.expansions,
                                   detail::stage_seed(config.seed, tag * 16 + 3));
  return g;
}

inline BenchBuild build_tintbench(std::span<const Caption> captions, const Vocabulary& vocab,
                                  const BenchConfig& config = {}, const EmbeddingStore* store = nullptr) {
  if (captions.empty()) throw input_error("no captions");
  BenchBuild b;
  auto filtered = filter_color_captions(captions);
  b.stats = filtered.stats;
  try {
    b.single = build_group(filtered.single, ColorGroup::Single, vocab, config, store);
    b.multi = build_group(filtered.multi, ColorGroup::Multi, vocab, config, store);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("build-bench: ") + e.what());
  }
  return b;
}

inline nlohmann::ordered_json to_json(const BenchPrompt& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["prompt"] = p.prompt;
  j["group"] = to_string(p.group);
  j["substitutions"] = nlohmann::ordered_json::array();
  for (const auto& s : p.substitutions) {
    nlohmann::ordered_json sj;
    sj["from"] = s.from;
    sj["to"] = s.to;
    sj["category"] = to_string(s.category);
    sj["hex"] = s.hex;
    if (s.fallback) sj["fallback"] = true;
    j["substitutions"].push_back(std::move(sj));
  }
  return j;
}

/// Single-group prompts first, then multi, one JSON object per line.
inline void write_bench_jsonl(std::ostream& out, const BenchBuild& b) {
  for (const auto* g : {&b.single, &b.multi})
    for (const auto& p : g->prompts) out << to_json(p).dump() << '\n';
}

}  // namespace tintforge
