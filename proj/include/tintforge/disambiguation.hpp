#pragma once

// Color-term detection and prompt disambiguation. The offline path resolves
// terms through the compound-color database; the LLM path asks a chat model
// for a structured analysis and validates it against the same vocabulary.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tintforge/color_vocab.hpp"
#include "tintforge/colorspace.hpp"
#include "tintforge/error.hpp"
#include "tintforge/text.hpp"

namespace tintforge {

enum class TermKind { Basic, Compound, HexLiteral };

inline std::string_view to_string(TermKind k) {
  switch (k) {
    case TermKind::Basic: return "basic";
    case TermKind::Compound: return "compound";
    case TermKind::HexLiteral: return "hex";
  }
  return "?";
}

struct TermMatch {
  std::string term;       // text as written in the prompt
  std::string canonical;  // vocabulary spelling (basic name, compound name, or #RRGGBB)
  TermKind kind = TermKind::Basic;
  TokenRange tokens;
  CharRange chars;
};

/// Word-sequence lexicon over compound names, the basic terms and basic
/// aliases. Keys are lowercased token sequences.
class Lexicon {
 public:
  struct Entry {
    std::string canonical;
    TermKind kind = TermKind::Basic;
  };

  Lexicon() = default;

  explicit Lexicon(const Vocabulary& vocab, bool include_compounds = true) {
    if (include_compounds)
      for (const auto& c : vocab.compounds()) add(c.name, {c.name, TermKind::Compound});
    for (auto name : kBasicColorNames) add(name, {std::string(name), TermKind::Basic});
    add("grey", {"gray", TermKind::Basic});
  }

  static Lexicon basics_only() {
    Lexicon lex;
    for (auto name : kBasicColorNames) lex.add(name, {std::string(name), TermKind::Basic});
    lex.add("grey", {"gray", TermKind::Basic});
    return lex;
  }

  void add(std::string_view phrase, Entry entry) {
    auto keys = token_keys(phrase);
    if (keys.empty()) throw input_error("empty lexicon phrase");
    longest_ = std::max(longest_, keys.size());
    entries_.insert_or_assign(std::move(keys), std::move(entry));
  }

  const Entry* find(const std::vector<std::string>& keys) const {
    auto it = entries_.find(keys);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t longest_phrase() const noexcept { return longest_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::vector<std::string>, Entry> entries_;
  std::size_t longest_ = 0;
};

namespace detail {

inline bool is_hex_word(std::string_view w) {
  return w.size() == 6 && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isxdigit(c); });
}

}  // namespace detail

/// Leftmost-longest scan over the prompt's tokens. Also recognizes `#RRGGBB`
/// literals. Returned matches are ordered and never overlap.
inline std::vector<TermMatch> detect_color_terms(std::string_view prompt, const Lexicon& lexicon) {
  const auto tokens = tokenize(prompt);
  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  for (const auto& t : tokens) keys.push_back(to_lower(t.text));

  std::vector<TermMatch> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i].text == "#" && i + 1 < tokens.size() && tokens[i + 1].chars.begin == tokens[i].chars.end &&
        detail::is_hex_word(tokens[i + 1].text)) {
      const CharRange chars{tokens[i].chars.begin, tokens[i + 1].chars.end};
      out.push_back({std::string(prompt.substr(chars.begin, chars.size())),
                     to_hex(parse_hex(tokens[i + 1].text)), TermKind::HexLiteral, {i, 2}, chars});
      i += 2;
      continue;
    }
    const std::size_t max_len = std::min(lexicon.longest_phrase(), tokens.size() - i);
    bool matched = false;
    for (std::size_t len = max_len; len >= 1 && !matched; --len) {
      if (!tokens[i].is_word || !tokens[i + len - 1].is_word) continue;
      std::vector<std::string> probe(keys.begin() + static_cast<std::ptrdiff_t>(i),
                                     keys.begin() + static_cast<std::ptrdiff_t>(i + len));
      if (const auto* e = lexicon.find(probe)) {
        const CharRange chars{tokens[i].chars.begin, tokens[i + len - 1].chars.end};
        out.push_back({std::string(prompt.substr(chars.begin, chars.size())), e->canonical, e->kind, {i, len},
                       chars});
        i += len;
        matched = true;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

inline std::vector<TermMatch> detect_color_terms(std::string_view prompt, const Vocabulary& vocab) {
  return detect_color_terms(prompt, Lexicon(vocab));
}

struct ColorAnalysis {
  std::string term;
  TermKind kind = TermKind::Basic;
  bool is_ambiguous = false;
  std::optional<std::string> basic_term;  // nullopt when unresolved
  std::optional<SrgbColor> reference_rgb;
  std::optional<CompoundCategory> category;
  TokenRange span;
  CharRange chars;
  std::string rewritten_fragment;
};

struct DisambiguationResult {
  std::string original_prompt;
  std::string rewritten_prompt;
  std::vector<ColorAnalysis> analyses;
};

/// Rebuilds a prompt by replacing each analysis's character range with its
/// rewritten fragment. Ranges must be ordered and disjoint.
inline std::string splice_rewrites(std::string_view prompt, std::span<const ColorAnalysis> analyses) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& a : analyses) {
    if (a.chars.begin < pos || a.chars.end > prompt.size() || a.chars.end < a.chars.begin)
      throw input_error("overlapping or out-of-range color spans");
    out.append(prompt.substr(pos, a.chars.begin - pos));
    out.append(a.rewritten_fragment);
    pos = a.chars.end;
  }
  out.append(prompt.substr(pos));
  return out;
}

/// Categories whose names refer to something other than a color first.
inline bool is_ambiguous_category(CompoundCategory c) {
  return c == CompoundCategory::Object || c == CompoundCategory::Signature || c == CompoundCategory::Abstract;
}

namespace detail {

inline std::string replacement_for(std::string_view original, const std::string& basic, bool at_start) {
  std::string r = basic;
  if (at_start && !original.empty() && std::isupper(static_cast<unsigned char>(original.front())))
    r.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(r.front())));
  return r;
}

}  // namespace detail

/// Resolves one detected term without network access.
inline ColorAnalysis analyze_term(const TermMatch& m, const Vocabulary& vocab, bool at_prompt_start = false) {
  ColorAnalysis a;
  a.term = m.term;
  a.kind = m.kind;
  a.span = m.tokens;
  a.chars = m.chars;
  a.rewritten_fragment = m.term;
  switch (m.kind) {
    case TermKind::Basic: {
      a.basic_term = m.canonical;
      if (!vocab.basics().empty()) a.reference_rgb = vocab.basics().at(m.canonical).srgb;
      break;
    }
    case TermKind::Compound: {
      const CompoundColor* c = vocab.find(m.canonical);
      if (c == nullptr) {
        a.is_ambiguous = true;
        break;
      }
      a.basic_term = c->basic_anchor;
      a.reference_rgb = c->srgb;
      a.category = c->category;
      a.is_ambiguous = is_ambiguous_category(c->category);
      a.rewritten_fragment = detail::replacement_for(m.term, c->basic_anchor, at_prompt_start);
      break;
    }
    case TermKind::HexLiteral: {
      a.is_ambiguous = true;
      a.reference_rgb = parse_hex(m.canonical);
      if (!vocab.basics().empty()) {
        a.basic_term = classify_hue_group(vocab.basics(), *a.reference_rgb).nearest.name;
        a.rewritten_fragment = detail::replacement_for("", *a.basic_term, false);
      }
      break;
    }
  }
  return a;
}

inline DisambiguationResult disambiguate_offline(std::string_view prompt, const Vocabulary& vocab,
                                                 const Lexicon& lexicon) {
  DisambiguationResult r;
  r.original_prompt = std::string(prompt);
  for (const auto& m : detect_color_terms(prompt, lexicon)) {
    const bool at_start = trim(prompt.substr(0, m.chars.begin)).empty();
    r.analyses.push_back(analyze_term(m, vocab, at_start));
  }
  r.rewritten_prompt = splice_rewrites(prompt, r.analyses);
  return r;
}

inline DisambiguationResult disambiguate_offline(std::string_view prompt, const Vocabulary& vocab) {
  return disambiguate_offline(prompt, vocab, Lexicon(vocab));
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const ColorAnalysis& a) {
  nlohmann::ordered_json j;
  j["term"] = a.term;
  j["kind"] = to_string(a.kind);
  j["ambiguous"] = a.is_ambiguous;
  j["basic"] = a.basic_term ? nlohmann::ordered_json(*a.basic_term) : nlohmann::ordered_json(nullptr);
  j["hex"] = a.reference_rgb ? nlohmann::ordered_json(to_hex(*a.reference_rgb)) : nlohmann::ordered_json(nullptr);
  j["category"] = a.category ? nlohmann::ordered_json(std::string(to_string(*a.category)))
                             : nlohmann::ordered_json(nullptr);
  j["tokens"] = {a.span.first, a.span.end()};
  j["chars"] = {a.chars.begin, a.chars.end};
  j["rewritten_fragment"] = a.rewritten_fragment;
  return j;
}

inline nlohmann::ordered_json to_json(const DisambiguationResult& r) {
  nlohmann::ordered_json j;
  j["original_prompt"] = r.original_prompt;
  j["rewritten_prompt"] = r.rewritten_prompt;
  j["analyses"] = nlohmann::ordered_json::array();
  for (const auto& a : r.analyses) j["analyses"].push_back(to_json(a));
  return j;
}

// ---------------------------------------------------------------------------
// LLM path

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key;
  int timeout_seconds = 60;
  int max_attempts = 3;  // per request, network failures only
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds max_backoff{4000};
  int max_concurrency = 4;
};

/// Posts one chat-completion request body and returns the parsed response
/// body. Implementations throw Error(ErrorKind::Network) on transport
/// failure; retryable() on the thrown NetworkError decides whether to retry.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual nlohmann::json post(const nlohmann::json& request) = 0;
};

class NetworkError : public Error {
 public:
  NetworkError(const std::string& what, bool retryable, int status = 0)
      : Error(ErrorKind::Network, what), retryable_(retryable), status_(status) {}
  bool retryable() const noexcept { return retryable_; }
  int status() const noexcept { return status_; }

 private:
  bool retryable_;
  int status_;
};

inline Error schema_error(const std::string& what) { return Error(ErrorKind::Schema, what); }

inline constexpr std::string_view kDisambiguationInstructions = R"(You analyze color terms in text-to-image prompts.
For every color term in the user's prompt, decide whether a text-to-image model could misread it, for example
because the name also denotes an object, a brand, a place or a mood rather than a hue. Map every term to
exactly one of the eleven basic color terms: black, blue, brown, gray, green, orange, pink, purple, red, white,
yellow. Give the color the term denotes as a six-digit sRGB hex code. Rewrite the prompt so that each ambiguous
term is expressed through its basic color term and keeps no unintended meaning; leave unambiguous terms unchanged.

Reply with a single JSON object and nothing else:
{"analyses": [{"term": "<color term exactly as written in the prompt>",
               "ambiguous": <true|false>,
               "basic": "<one of the eleven basic color terms>",
               "hex": "#RRGGBB",
               "rewritten_fragment": "<text replacing the term in the rewritten prompt>"}],
 "rewritten_prompt": "<the full rewritten prompt>"}
List the terms in the order they occur. If the prompt has no color term, reply with
{"analyses": [], "rewritten_prompt": "<the prompt unchanged>"}.)";

inline nlohmann::json build_chat_request(const LlmConfig& config, const nlohmann::json& messages) {
  return {{"model", config.model},
          {"temperature", 0},
          {"response_format", {{"type", "json_object"}}},
          {"messages", messages}};
}

inline nlohmann::json initial_messages(std::string_view prompt) {
  return nlohmann::json::array({{{"role", "system"}, {"content", kDisambiguationInstructions}},
                                {{"role", "user"}, {"content", std::string(prompt)}}});
}

/// The assistant message text of a chat-completion response body.
inline std::string extract_reply_content(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
    throw schema_error("chat response has no choices");
  const auto& msg = body["choices"][0].value("message", nlohmann::json::object());
  if (!msg.contains("content") || !msg["content"].is_string())
    throw schema_error("chat response message has no string content");
  return msg["content"].get<std::string>();
}

namespace detail {

inline std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from) {
  if (needle.empty() || needle.size() > haystack.size()) return std::string_view::npos;
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  return h.find(n, from);
}

inline TokenRange tokens_covering(std::string_view prompt, CharRange chars) {
  const auto tokens = tokenize(prompt);
  TokenRange r{0, 0};
  bool started = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].chars.end <= chars.begin || tokens[i].chars.begin >= chars.end) continue;
    if (!started) {
      r.first = i;
      started = true;
    }
    r.count = i - r.first + 1;
  }
  return r;
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key, std::size_t index) {
  if (!obj.contains(key)) throw schema_error("analyses[" + std::to_string(index) + "] lacks '" + key + "'");
  return obj[key];
}

}  // namespace detail

/// Validates a model reply against the response schema and the vocabulary.
/// Throws a schema Error describing the first violation.
inline DisambiguationResult parse_llm_reply(std::string_view reply, std::string_view prompt) {
  nlohmann::json j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded()) throw schema_error("reply is not valid JSON");
  if (!j.is_object()) throw schema_error("reply is not a JSON object");
  if (!j.contains("analyses") || !j["analyses"].is_array()) throw schema_error("'analyses' must be an array");
  if (!j.contains("rewritten_prompt") || !j["rewritten_prompt"].is_string())
    throw schema_error("'rewritten_prompt' must be a string");

  DisambiguationResult r;
  r.original_prompt = std::string(prompt);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < j["analyses"].size(); ++i) {
    const auto& item = j["analyses"][i];
    const std::string where = "analyses[" + std::to_string(i) + "]";
    if (!item.is_object()) throw schema_error(where + " is not an object");
    const auto& term = detail::require_field(item, "term", i);
    const auto& ambiguous = detail::require_field(item, "ambiguous", i);
    const auto& basic = detail::require_field(item, "basic", i);
    const auto& hex = detail::require_field(item, "hex", i);
    const auto& fragment = detail::require_field(item, "rewritten_fragment", i);
    if (!term.is_string() || term.get<std::string>().empty()) throw schema_error(where + ".term must be a non-empty string");
    if (!ambiguous.is_boolean()) throw schema_error(where + ".ambiguous must be a boolean");
    if (!basic.is_string()) throw schema_error(where + ".basic must be a string");
    if (!hex.is_string() || !hex.get<std::string>().starts_with('#') || !is_hex_color(hex.get<std::string>()))
      throw schema_error(where + ".hex must be #RRGGBB");
    if (!fragment.is_string()) throw schema_error(where + ".rewritten_fragment must be a string");

    ColorAnalysis a;
    a.term = term.get<std::string>();
    a.is_ambiguous = ambiguous.get<bool>();
    std::string b = to_lower(trim(basic.get<std::string>()));
    if (auto alias = basic_alias_target(b)) b = std::string(*alias);
    if (!is_basic_color_name(b)) throw schema_error(where + ".basic '" + basic.get<std::string>() + "' is not a basic color term");
    a.basic_term = b;
    a.reference_rgb = parse_hex(hex.get<std::string>());
    a.rewritten_fragment = fragment.get<std::string>();
    const std::size_t at = detail::find_ci(prompt, a.term, cursor);
    if (at == std::string_view::npos) throw schema_error(where + ".term '" + a.term + "' does not occur in the prompt");
    a.chars = {at, at + a.term.size()};
    a.term = std::string(prompt.substr(at, a.term.size()));
    a.span = detail::tokens_covering(prompt, a.chars);
    a.kind = is_hex_color(a.term) ? TermKind::HexLiteral
             : is_basic_color_name(to_lower(a.term)) || basic_alias_target(to_lower(a.term)) ? TermKind::Basic
                                                                                            : TermKind::Compound;
    cursor = a.chars.end;
    r.analyses.push_back(std::move(a));
  }
  r.rewritten_prompt = r.analyses.empty() ? r.original_prompt : j["rewritten_prompt"].get<std::string>();
  return r;
}

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Sends one request, retrying retryable network failures with exponential
/// backoff up to config.max_attempts.
inline nlohmann::json post_with_retry(ChatTransport& transport, const LlmConfig& config,
                                      const nlohmann::json& request, const Sleeper& sleep = real_sleep) {
  const int attempts = std::max(1, config.max_attempts);
  auto backoff = config.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return transport.post(request);
    } catch (const NetworkError& e) {
      if (!e.retryable() || attempt >= attempts)
        throw NetworkError(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt" +
                               (attempt == 1 ? "" : "s") + ")",
                           false, e.status());
    }
    sleep(backoff);
    backoff = std::min(backoff * 2, config.max_backoff);
  }
}

/// Disambiguates a prompt through a chat model. A reply that violates the
/// schema is answered with one corrective message; a second violation is a
/// schema error.
inline DisambiguationResult disambiguate_llm(std::string_view prompt, ChatTransport& transport,
                                             const LlmConfig& config, const Sleeper& sleep = real_sleep) {
  if (trim(prompt).empty()) throw input_error("prompt is empty");
  nlohmann::json messages = initial_messages(prompt);
  std::string last_violation;
  for (int round = 0; round < 2; ++round) {
    const auto body = post_with_retry(transport, config, build_chat_request(config, messages), sleep);
    std::string content;
    try {
      content = extract_reply_content(body);
      return parse_llm_reply(content, prompt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Schema) throw;
      last_violation = e.what();
    }
    messages.push_back({{"role", "assistant"}, {"content", content}});
    messages.push_back({{"role", "user"},
                        {"content", "Your reply violated the required format: " + last_violation +
                                        ". Reply again with only the JSON object described above."}});
  }
  throw schema_error("model reply rejected twice: " + last_violation);
}

/// Runs a batch with at most config.max_concurrency requests in flight. The
/// transport must be safe for concurrent use. Entries hold either a result or
/// the error raised for that prompt.
struct BatchEntry {
  std::optional<DisambiguationResult> result;
  std::exception_ptr error;
};

inline std::vector<BatchEntry> disambiguate_batch(std::span<const std::string> prompts, ChatTransport& transport,
                                                  const LlmConfig& config, const Sleeper& sleep = real_sleep) {
  std::vector<BatchEntry> out(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        out[i].result = disambiguate_llm(prompts[i], transport, config, sleep);
      } catch (...) {
        out[i].error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(prompts.size(), static_cast<std::size_t>(std::max(1, config.max_concurrency)));
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  return out;
}

}  // namespace tintforge
