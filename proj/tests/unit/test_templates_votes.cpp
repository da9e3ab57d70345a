#include <gtest/gtest.h>

#include <cmath>

#include "cot_corpus.hpp"
#include "generators.hpp"
#include "selfpref/error.hpp"
#include "selfpref/templates.hpp"
#include "selfpref/votes.hpp"

using namespace selfpref;

TEST(Templates, BuiltinsBindEveryPlaceholder) {
  const auto names = builtin_template_names();
  EXPECT_EQ(names.size(), 10u);
  for (const auto& name : names) {
    const auto& t = builtin_template(name);
    std::map<std::string, std::string> extra;
    for (const auto& p : placeholders(t.body))
      if (p != t.query_slot && p != t.first_slot && p != t.second_slot) extra[p] = "x";
    EXPECT_NO_THROW(render(t, "q", "a", "b", extra)) << name;
  }
  EXPECT_THROW(builtin_template("nope"), Error);
}

TEST(Templates, MathTemplateKeepsDelimiterLines) {
  const auto text = render(builtin_template("verifiable-math"), "1+1?", "2", "3");
  EXPECT_NE(text.find("<The Start of Assistant A's Answer>\n2\n<The End of Assistant A's Answer>"), std::string::npos);
  EXPECT_NE(text.find("<The Start of Assistant B's Answer>\n3\n<The End of Assistant B's Answer>"), std::string::npos);
  EXPECT_NE(text.find("<User Prompt>\n1+1?"), std::string::npos);
}

TEST(Templates, SpacedPlaceholderNames) {
  const auto& t = builtin_template("alpaca");
  const auto ph = placeholders(t.body);
  EXPECT_NE(std::find(ph.begin(), ph.end(), "response a"), ph.end());
  const auto text = render(t, "Q", "first answer", "second answer");
  EXPECT_NE(text.find("first answer"), std::string::npos);
  EXPECT_EQ(text.find("{response a}"), std::string::npos);
}

TEST(Templates, QualityNeedsThePassage) {
  const auto& t = builtin_template("quality");
  EXPECT_THROW(render(t, "q", "a", "b"), Error);
  std::map<std::string, std::string> extra;
  for (const auto& p : placeholders(t.body))
    if (p != t.query_slot && p != t.first_slot && p != t.second_slot) extra[p] = "PASSAGE";
  EXPECT_NE(render(t, "q", "a", "b", extra).find("PASSAGE"), std::string::npos);
}

TEST(Templates, EmptyCandidateRenders) {
  const auto text = render(builtin_template("verifiable-math"), "q", "", "b");
  EXPECT_NE(text.find("<The Start of Assistant A's Answer>\n\n<The End"), std::string::npos);
}

TEST(Templates, UnknownPlaceholderIsAnError) {
  PromptTemplate t{"custom",   "Q: {question} A: {answer_a} B: {answer_b} C: {mystery}",
                   "question", "answer_a",
                   "answer_b", {"A", "B", std::nullopt},
                   false};
  try {
    render(t, "q", "a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTemplate);
  }
}

TEST(Templates, SubstitutedTextIsNotRescanned) {
  PromptTemplate t{
      "custom", "[{question}|{answer_a}|{answer_b}]", "question", "answer_a", "answer_b", {"A", "B", std::nullopt},
      false};
  EXPECT_EQ(render(t, "{answer_b}", "{x}", "b"), "[{answer_b}|{x}|b]");
}

TEST(Templates, RenderingIsInjective) {
  PromptTemplate t{"custom",   "<q>{question}</q><a>{answer_a}</a><b>{answer_b}</b>",
                   "question", "answer_a",
                   "answer_b", {"A", "B", std::nullopt},
                   false};
  gen::Rng rng(1);
  auto word = [&] {
    std::string w;
    for (std::size_t i = 0, n = gen::below(rng, 4); i < n; ++i) w += static_cast<char>('a' + gen::below(rng, 3));
    return w;
  };
  std::map<std::string, std::tuple<std::string, std::string, std::string>> seen;
  for (int i = 0; i < 3000; ++i) {
    auto in = std::make_tuple(word(), word(), word());
    auto out = render(t, std::get<0>(in), std::get<1>(in), std::get<2>(in));
    auto [it, fresh] = seen.emplace(out, in);
    if (!fresh) {
      EXPECT_EQ(it->second, in);
    }
  }
}

namespace {

std::vector<TokenLogprob> top(std::initializer_list<std::pair<const char*, double>> probs) {
  std::vector<TokenLogprob> out;
  for (auto [tok, p] : probs) out.push_back({tok, std::log(p)});
  return out;
}

const VoteAlphabet kAb{"A", "B", std::nullopt};
const VoteAlphabet kAtb{"A", "B", "T"};

}  // namespace

TEST(FirstToken, SubjectInEitherPosition) {
  auto first = extract_first_token(top({{"A", 0.8}, {"B", 0.2}}), kAb, true);
  auto second = extract_first_token(top({{"A", 0.4}, {"B", 0.6}}), kAb, false);
  ASSERT_TRUE(first && second);
  EXPECT_NEAR(first->p_subject_win, 0.8, 1e-12);
  EXPECT_NEAR(second->p_subject_win, 0.6, 1e-12);
  EXPECT_NEAR((first->p_subject_win + second->p_subject_win) / 2, 0.7, 1e-12);
}

TEST(FirstToken, TieMassIsExcludedAndReported) {
  auto v = extract_first_token(top({{"A", 0.3}, {"T", 0.4}, {"B", 0.3}}), kAtb, true);
  ASSERT_TRUE(v);
  EXPECT_NEAR(v->p_subject_win, 0.5, 1e-12);
  EXPECT_NEAR(v->tie_mass, 0.4, 1e-12);
}

TEST(FirstToken, VariantsUseTheBestScore) {
  auto v = extract_first_token(top({{" A", 0.1}, {"A", 0.5}, {"a", 0.05}, {"ĠB", 0.25}, {"other", 0.1}}), kAb, true);
  ASSERT_TRUE(v);
  EXPECT_NEAR(v->p_subject_win, 0.5 / 0.75, 1e-12);
  EXPECT_EQ(normalize_label("▁B", kAb), "B");
  EXPECT_EQ(normalize_label(" b ", kAb), "B");
  EXPECT_FALSE(normalize_label("AB", kAb));
}

TEST(FirstToken, MissingLabelIsNotAVote) {
  EXPECT_FALSE(extract_first_token(top({{"A", 0.9}, {"C", 0.1}}), kAb, true));
  EXPECT_FALSE(extract_first_token({}, kAb, false));
}

TEST(FirstToken, ScaleInvariance) {
  gen::Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double la = std::log(gen::unit(rng) + 1e-9), lb = std::log(gen::unit(rng) + 1e-9);
    const double shift = 50 * gen::unit(rng) - 25;
    std::vector<TokenLogprob> base{{"A", la}, {"B", lb}}, moved{{"A", la + shift}, {"B", lb + shift}};
    EXPECT_NEAR(extract_first_token(base, kAb, true)->p_subject_win,
                extract_first_token(moved, kAb, true)->p_subject_win, 1e-12);
  }
}

TEST(FirstToken, ExtremeLogprobsStayFinite) {
  std::vector<TokenLogprob> t{{"A", -1000.0}, {"B", 0.0}};
  auto v = extract_first_token(t, kAb, true);
  ASSERT_TRUE(v);
  EXPECT_GE(v->p_subject_win, 0.0);
  EXPECT_LT(v->p_subject_win, 1e-300);
}

TEST(CotVerdict, Corpus) {
  for (const auto& c : corpus::cot_cases()) {
    const auto v = parse_cot_verdict(c.text, kAtb);
    EXPECT_EQ(v.label, c.label) << c.text;
    EXPECT_EQ(v.failure, c.failure) << c.text;
  }
}

TEST(CotVerdict, TotalOnRandomText) {
  gen::Rng rng(6);
  const std::string pieces[] = {"My final verdict is ", "$$", "$", "A", "B", "T", "Q", " ", "\n", ".",
                                "my FINAL verdict IS"};
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    for (std::size_t k = 0, n = gen::below(rng, 12); k < n; ++k) text += pieces[gen::below(rng, std::size(pieces))];
    const auto v = parse_cot_verdict(text, kAtb);
    EXPECT_NE(v.label.has_value(), v.failure.has_value()) << text;
    if (v.label) {
      EXPECT_TRUE(kAtb.contains(*v.label));
    }
  }
}

TEST(CotVerdict, VoteMapping) {
  EXPECT_EQ(verdict_vote("A", kAtb, true).p_subject_win, 1.0);
  EXPECT_EQ(verdict_vote("A", kAtb, false).p_subject_win, 0.0);
  EXPECT_EQ(verdict_vote("B", kAtb, false).p_subject_win, 1.0);
  EXPECT_EQ(verdict_vote("T", kAtb, true).p_subject_win, 0.5);
  EXPECT_THROW(verdict_vote("Q", kAtb, true), Error);
}
