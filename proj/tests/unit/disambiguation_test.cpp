#include <gtest/gtest.h>

#include <deque>
#include <mutex>
#include <set>

#include "test_support.hpp"
#include "tintforge/disambiguation.hpp"

using namespace tintforge;
using fixtures::vocab;
using nlohmann::json;

namespace {

std::vector<std::string> terms_of(const std::vector<TermMatch>& m) {
  std::vector<std::string> out;
  for (const auto& t : m) out.push_back(t.term);
  return out;
}

json chat_body(const std::string& content) {
  return {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}};
}

// Scripted transport: each post() pops the next reply or failure.
class ScriptedTransport : public ChatTransport {
 public:
  struct Step {
    std::optional<std::string> content;
    std::optional<NetworkError> failure;
  };

  void reply(std::string content) { steps_.push_back({std::move(content), std::nullopt}); }
  void fail(bool retryable, int status) { steps_.push_back({std::nullopt, NetworkError("http failure", retryable, status)}); }

  json post(const json& request) override {
    std::lock_guard lock(mu_);
    requests.push_back(request);
    if (steps_.empty()) throw NetworkError("script exhausted", false);
    auto step = steps_.front();
    steps_.pop_front();
    if (step.failure) throw *step.failure;
    return chat_body(*step.content);
  }

  std::vector<json> requests;

 private:
  std::mutex mu_;
  std::deque<Step> steps_;
};

// Answers every prompt with an identity analysis of its first detected term.
class EchoTransport : public ChatTransport {
 public:
  json post(const json& request) override {
    const std::string prompt = request["messages"][1]["content"];
    const auto r = disambiguate_offline(prompt, vocab());
    json analyses = json::array();
    for (const auto& a : r.analyses)
      analyses.push_back({{"term", a.term},
                          {"ambiguous", a.is_ambiguous},
                          {"basic", *a.basic_term},
                          {"hex", to_hex(*a.reference_rgb)},
                          {"rewritten_fragment", a.rewritten_fragment}});
    ++calls;
    return chat_body(json{{"analyses", analyses}, {"rewritten_prompt", r.rewritten_prompt}}.dump());
  }
  std::atomic<int> calls{0};
};

const std::string kRoseReply = R"({"analyses":[{"term":"rose red","ambiguous":true,"basic":"red",
  "hex":"#C21E56","rewritten_fragment":"deep red"}],"rewritten_prompt":"a deep red dress"})";

LlmConfig fast_config() {
  LlmConfig c;
  c.max_attempts = 3;
  c.initial_backoff = std::chrono::milliseconds(100);
  c.max_backoff = std::chrono::milliseconds(150);
  return c;
}

}  // namespace

TEST(Detect, BasicTerm) {
  const auto m = detect_color_terms("a blue backpack", vocab());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].term, "blue");
  EXPECT_EQ(m[0].kind, TermKind::Basic);
  EXPECT_EQ(m[0].tokens.first, 1u);
  EXPECT_EQ(m[0].tokens.count, 1u);
  EXPECT_EQ(m[0].chars.begin, 2u);
  EXPECT_EQ(m[0].chars.end, 6u);
}

TEST(Detect, LongestMatchPrefersCompounds) {
  const auto m = detect_color_terms("a lime green shirt", vocab());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].term, "lime green");
  EXPECT_EQ(m[0].kind, TermKind::Compound);
  EXPECT_EQ(m[0].tokens.count, 2u);
}

TEST(Detect, TwoTermsInOrder) {
  const auto m = detect_color_terms("a Duke blue jersey and ruby red bags", vocab());
  EXPECT_EQ(terms_of(m), (std::vector<std::string>{"Duke blue", "ruby red"}));
  EXPECT_EQ(m[0].canonical, "Duke blue");
}

TEST(Detect, UnknownModifierLeavesBasic) {
  const auto m = detect_color_terms("a glorp green hat", vocab());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].term, "green");
}

TEST(Detect, HexLiteralAndAlias) {
  const auto m = detect_color_terms("paint it #ff7f50, then grey", vocab());
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].kind, TermKind::HexLiteral);
  EXPECT_EQ(m[0].canonical, "#FF7F50");
  EXPECT_EQ(m[0].term, "#ff7f50");
  EXPECT_EQ(m[1].canonical, "gray");
  EXPECT_TRUE(detect_color_terms("# ff7f50 ff7f50", vocab()).empty());
}

TEST(Detect, NoTerms) {
  EXPECT_TRUE(detect_color_terms("a cat on a mat", vocab()).empty());
  EXPECT_TRUE(detect_color_terms("", vocab()).empty());
}

TEST(Detect, SpansOrderedNonOverlappingOnRandomVocabularyText) {
  std::mt19937_64 rng(5);
  const auto comps = vocab().compounds();
  const std::vector<std::string> filler{"a", "the", "with", "and", "green", "red", "cat", "dark"};
  for (int t = 0; t < 200; ++t) {
    std::string prompt;
    for (int w = 0; w < 12; ++w) {
      if (rng() % 3 == 0)
        prompt += comps[rng() % comps.size()].name;
      else
        prompt += filler[rng() % filler.size()];
      prompt += ' ';
    }
    const auto m = detect_color_terms(prompt, vocab());
    for (std::size_t i = 1; i < m.size(); ++i) {
      EXPECT_LE(m[i - 1].chars.end, m[i].chars.begin);
      EXPECT_LE(m[i - 1].tokens.end(), m[i].tokens.first);
    }
    for (const auto& x : m) EXPECT_EQ(prompt.substr(x.chars.begin, x.chars.size()), x.term);
  }
}

TEST(Offline, DukeBlueAndRubyRed) {
  const auto r = disambiguate_offline("a Duke blue jersey and ruby red bags", vocab());
  EXPECT_EQ(r.rewritten_prompt, "a blue jersey and red bags");
  ASSERT_EQ(r.analyses.size(), 2u);
  EXPECT_EQ(*r.analyses[0].basic_term, "blue");
  EXPECT_EQ(to_hex(*r.analyses[0].reference_rgb), "#00009C");
  EXPECT_TRUE(r.analyses[0].is_ambiguous);
  EXPECT_EQ(*r.analyses[0].category, CompoundCategory::Signature);
  EXPECT_EQ(to_hex(*r.analyses[1].reference_rgb), "#9B111E");
}

TEST(Offline, BasicTermIsIdentity) {
  const auto r = disambiguate_offline("a red bench", vocab());
  ASSERT_EQ(r.analyses.size(), 1u);
  EXPECT_FALSE(r.analyses[0].is_ambiguous);
  EXPECT_EQ(*r.analyses[0].basic_term, "red");
  EXPECT_EQ(r.rewritten_prompt, "a red bench");
}

TEST(Offline, NonAmbiguousCategoryStillRewrites) {
  const CompoundColor* light = nullptr;
  for (const auto& c : vocab().compounds())
    if (c.category == CompoundCategory::Modified) light = &c;
  ASSERT_NE(light, nullptr);
  const auto r = disambiguate_offline("a " + light->name + " wall", vocab());
  ASSERT_EQ(r.analyses.size(), 1u);
  EXPECT_FALSE(r.analyses[0].is_ambiguous);
  EXPECT_EQ(r.rewritten_prompt, "a " + light->basic_anchor + " wall");
}

TEST(Offline, CapitalizationAtPromptStartOnly) {
  EXPECT_EQ(disambiguate_offline("Ruby red bags", vocab()).rewritten_prompt, "Red bags");
  EXPECT_EQ(disambiguate_offline("  ruby red bags", vocab()).rewritten_prompt, "  red bags");
  EXPECT_EQ(disambiguate_offline("bags in Ruby red", vocab()).rewritten_prompt, "bags in red");
}

TEST(Offline, HexLiteralResolvesToNearestAnchor) {
  const auto r = disambiguate_offline("a #F97306 kite", vocab());
  ASSERT_EQ(r.analyses.size(), 1u);
  EXPECT_TRUE(r.analyses[0].is_ambiguous);
  EXPECT_EQ(*r.analyses[0].basic_term, "orange");
  EXPECT_EQ(r.rewritten_prompt, "a orange kite");
}

TEST(Offline, EveryCompoundKeepsDbColorAndGroup) {
  for (const auto& c : vocab().compounds()) {
    const auto r = disambiguate_offline("a " + c.name + " car", vocab());
    ASSERT_EQ(r.analyses.size(), 1u) << c.name;
    const auto& a = r.analyses[0];
    EXPECT_EQ(a.reference_rgb, c.srgb) << c.name;
    EXPECT_EQ(classify_hue_group(vocab().basics(), *a.reference_rgb).group, hue_group_of(*a.basic_term)) << c.name;
    EXPECT_EQ(a.is_ambiguous, is_ambiguous_category(c.category));
  }
}

TEST(Offline, IdempotentOnRewrittenPrompts) {
  for (const auto& c : vocab().compounds()) {
    const auto once = disambiguate_offline("The " + c.name + " bag next to a teal " + c.name + " box", vocab());
    const auto twice = disambiguate_offline(once.rewritten_prompt, vocab());
    EXPECT_EQ(twice.rewritten_prompt, once.rewritten_prompt) << c.name;
    for (const auto& a : twice.analyses) EXPECT_EQ(a.kind, TermKind::Basic);
  }
}

TEST(Offline, SpliceReconstructsRewrittenPrompt) {
  const std::string p = "Lime green apples, ruby red bags, and a #0343DF sky";
  const auto r = disambiguate_offline(p, vocab());
  ASSERT_EQ(r.analyses.size(), 3u);
  std::string rebuilt;
  std::size_t pos = 0;
  for (const auto& a : r.analyses) {
    rebuilt += p.substr(pos, a.chars.begin - pos) + a.rewritten_fragment;
    pos = a.chars.end;
  }
  rebuilt += p.substr(pos);
  EXPECT_EQ(rebuilt, r.rewritten_prompt);
  EXPECT_EQ(r.rewritten_prompt, "Green apples, red bags, and a blue sky");
}

TEST(Offline, NoColorMeansNoAnalyses) {
  const auto r = disambiguate_offline("a cat on a mat", vocab());
  EXPECT_TRUE(r.analyses.empty());
  EXPECT_EQ(r.rewritten_prompt, r.original_prompt);
}

TEST(Offline, JsonShape) {
  const auto j = to_json(disambiguate_offline("a Duke blue jersey", vocab()));
  EXPECT_EQ(j["rewritten_prompt"], "a blue jersey");
  const auto& a = j["analyses"][0];
  EXPECT_EQ(a["kind"], "compound");
  EXPECT_EQ(a["basic"], "blue");
  EXPECT_EQ(a["hex"], "#00009C");
  EXPECT_EQ(a["category"], "Signature");
  EXPECT_EQ(a["tokens"], json::array({1, 3}));
  EXPECT_EQ(a["chars"], json::array({2, 11}));
}

TEST(LlmReply, RoseRedIsParsed) {
  const auto r = parse_llm_reply(kRoseReply, "a rose red dress");
  ASSERT_EQ(r.analyses.size(), 1u);
  const auto& a = r.analyses[0];
  EXPECT_TRUE(a.is_ambiguous);
  EXPECT_EQ(*a.basic_term, "red");
  EXPECT_EQ(a.kind, TermKind::Compound);
  EXPECT_EQ(classify_hue_group(vocab().basics(), *a.reference_rgb).group, HueGroup::Warm);
  EXPECT_EQ(a.chars.begin, 2u);
  EXPECT_EQ(a.span.first, 1u);
  EXPECT_EQ(a.span.count, 2u);
  EXPECT_EQ(r.rewritten_prompt.find("rose"), std::string::npos);
}

TEST(LlmReply, EmptyAnalysesKeepPrompt) {
  const auto r = parse_llm_reply(R"({"analyses":[],"rewritten_prompt":"something else"})", "a cat");
  EXPECT_TRUE(r.analyses.empty());
  EXPECT_EQ(r.rewritten_prompt, "a cat");
}

TEST(LlmReply, SchemaViolations) {
  const std::string p = "a rose red dress";
  auto kind_of = [&](const std::string& reply) {
    try {
      parse_llm_reply(reply, p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Input;
  };
  for (const std::string& bad : {
           std::string("not json"),
           std::string("[]"),
           std::string(R"({"analyses":{}, "rewritten_prompt":""})"),
           std::string(R"({"analyses":[]})"),
           std::string(R"({"analyses":[{"term":"rose red","ambiguous":true,"basic":"crimson","hex":"#C21E56","rewritten_fragment":"red"}],"rewritten_prompt":"x"})"),
           std::string(R"({"analyses":[{"term":"rose red","ambiguous":"yes","basic":"red","hex":"#C21E56","rewritten_fragment":"red"}],"rewritten_prompt":"x"})"),
           std::string(R"({"analyses":[{"term":"rose red","ambiguous":true,"basic":"red","hex":"C21E56","rewritten_fragment":"red"}],"rewritten_prompt":"x"})"),
           std::string(R"({"analyses":[{"term":"navy","ambiguous":true,"basic":"blue","hex":"#000080","rewritten_fragment":"blue"}],"rewritten_prompt":"x"})"),
           std::string(R"({"analyses":[{"term":"rose red","basic":"red","hex":"#C21E56","rewritten_fragment":"red"}],"rewritten_prompt":"x"})"),
       })
    EXPECT_EQ(kind_of(bad), ErrorKind::Schema) << bad;
}

TEST(LlmReply, GreyAliasAndRepeatedTerms) {
  const auto r = parse_llm_reply(
      R"({"analyses":[{"term":"red","ambiguous":false,"basic":"red","hex":"#E50000","rewritten_fragment":"red"},
                      {"term":"red","ambiguous":false,"basic":"Grey","hex":"#808080","rewritten_fragment":"red"}],
          "rewritten_prompt":"red and red"})",
      "red and red");
  ASSERT_EQ(r.analyses.size(), 2u);
  EXPECT_EQ(r.analyses[1].chars.begin, 8u);
  EXPECT_EQ(*r.analyses[1].basic_term, "gray");
}

TEST(LlmClient, RequestShape) {
  ScriptedTransport t;
  t.reply(kRoseReply);
  disambiguate_llm("a rose red dress", t, fast_config(), [](auto) {});
  ASSERT_EQ(t.requests.size(), 1u);
  const auto& req = t.requests[0];
  EXPECT_EQ(req["model"], "gpt-4o");
  EXPECT_EQ(req["temperature"], 0);
  EXPECT_EQ(req["response_format"]["type"], "json_object");
  EXPECT_EQ(req["messages"][0]["role"], "system");
  EXPECT_EQ(req["messages"][1]["content"], "a rose red dress");
}

TEST(LlmClient, ReasksOnceThenSucceeds) {
  ScriptedTransport t;
  t.reply("{oops");
  t.reply(kRoseReply);
  const auto r = disambiguate_llm("a rose red dress", t, fast_config(), [](auto) {});
  EXPECT_EQ(r.rewritten_prompt, "a deep red dress");
  ASSERT_EQ(t.requests.size(), 2u);
  const auto& msgs = t.requests[1]["messages"];
  ASSERT_EQ(msgs.size(), 4u);
  EXPECT_EQ(msgs[2]["content"], "{oops");
  EXPECT_NE(msgs[3]["content"].get<std::string>().find("violated"), std::string::npos);
}

TEST(LlmClient, MalformedTwiceIsSchemaError) {
  ScriptedTransport t;
  t.reply("{oops");
  t.reply(R"({"analyses":[{"term":"rose red"}],"rewritten_prompt":"x"})");
  try {
    disambiguate_llm("a rose red dress", t, fast_config(), [](auto) {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    EXPECT_NE(std::string(e.what()).find("rejected twice"), std::string::npos);
  }
  EXPECT_EQ(t.requests.size(), 2u);
}

TEST(LlmClient, RetriesRetryableFailuresWithBackoff) {
  ScriptedTransport t;
  t.fail(true, 503);
  t.fail(true, 429);
  t.reply(kRoseReply);
  std::vector<long> sleeps;
  const auto r = disambiguate_llm("a rose red dress", t, fast_config(), [&](auto d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(r.analyses.size(), 1u);
  EXPECT_EQ(sleeps, (std::vector<long>{100, 150}));
}

TEST(LlmClient, GivesUpAfterMaxAttempts) {
  ScriptedTransport t;
  for (int i = 0; i < 3; ++i) t.fail(true, 500);
  int sleeps = 0;
  try {
    disambiguate_llm("a rose red dress", t, fast_config(), [&](auto) { ++sleeps; });
    FAIL();
  } catch (const NetworkError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Network);
    EXPECT_EQ(e.status(), 500);
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
  }
  EXPECT_EQ(sleeps, 2);
}

TEST(LlmClient, NonRetryableFailsImmediately) {
  ScriptedTransport t;
  t.fail(false, 401);
  int sleeps = 0;
  EXPECT_THROW(disambiguate_llm("a rose red dress", t, fast_config(), [&](auto) { ++sleeps; }), NetworkError);
  EXPECT_EQ(sleeps, 0);
  EXPECT_EQ(t.requests.size(), 1u);
}

TEST(LlmClient, ResponseWithoutChoicesIsRejected) {
  EXPECT_THROW(extract_reply_content(json::object()), Error);
  EXPECT_THROW(extract_reply_content(json{{"choices", json::array({{{"message", {{"content", 3}}}}})}}), Error);
}

TEST(LlmClient, BatchPreservesOrderAndIsolatesErrors) {
  EchoTransport echo;
  std::vector<std::string> prompts;
  for (const auto& c : vocab().compounds()) prompts.push_back("a " + c.name + " lamp");
  prompts.push_back("   ");
  auto config = fast_config();
  config.max_concurrency = 3;
  const auto out = disambiguate_batch(prompts, echo, config, [](auto) {});
  ASSERT_EQ(out.size(), prompts.size());
  for (std::size_t i = 0; i + 1 < prompts.size(); ++i) {
    ASSERT_TRUE(out[i].result.has_value()) << prompts[i];
    EXPECT_EQ(out[i].result->original_prompt, prompts[i]);
    EXPECT_EQ(out[i].result->rewritten_prompt, disambiguate_offline(prompts[i], vocab()).rewritten_prompt);
  }
  EXPECT_FALSE(out.back().result.has_value());
  EXPECT_TRUE(out.back().error != nullptr);
  EXPECT_EQ(echo.calls.load(), static_cast<int>(prompts.size() - 1));
}
