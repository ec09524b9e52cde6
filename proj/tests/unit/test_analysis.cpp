#include <gtest/gtest.h>

#include <atomic>

#include "ragmt/analysis.hpp"
#include "ragmt/error.hpp"

using namespace ragmt;
using json = nlohmann::json;

namespace {

/// Fails the first `failures` calls with a transport error.
class FlakyJudge final : public JudgmentBackend {
 public:
  FlakyJudge(int failures, bool retriable) : failures_(failures), retriable_(retriable) {}
  std::string id() const override { return "flaky"; }
  std::string judge(const JudgmentRequest& r) override {
    if (calls_++ < failures_) throw TransportError("HTTP 503", retriable_);
    return r.task == AnalysisTask::NmccType ? "OUTER" : "A";
  }
  int calls() const { return calls_; }

 private:
  int failures_;
  bool retriable_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST(ParseA1Test, KeywordRule) {
  EXPECT_EQ(parse_a1_response("This is an inner relation because the head noun is the agent"), NmccType::Inner);
  EXPECT_EQ(parse_a1_response("outer"), NmccType::Outer);
  EXPECT_EQ(parse_a1_response("it is both inner and outer"), NmccType::Unknown);
  EXPECT_EQ(parse_a1_response("no idea"), NmccType::Unknown);
  EXPECT_EQ(parse_a1_response("これは外の関係です"), NmccType::Outer);
  EXPECT_EQ(parse_a1_response("内関係"), NmccType::Inner);
  EXPECT_EQ(parse_a1_response("INNER"), NmccType::Inner);
  // "innermost" is not the word "inner".
  EXPECT_EQ(parse_a1_response("innermost"), NmccType::Unknown);
}

TEST(ParseA1Test, FinalAnswerLineWins) {
  EXPECT_EQ(parse_a1_response("Inner relations are ... but here the noun has no role.\nANSWER: OUTER"),
            NmccType::Outer);
}

TEST(ParseA2Test, LettersAndNames) {
  EXPECT_EQ(parse_a2_response("(B) and (D)"), (RiskSet{RiskCategory::NmccHandling, RiskCategory::StyleRegister}));
  EXPECT_EQ(parse_a2_response("A"), RiskSet{RiskCategory::LexicalChoice});
  EXPECT_EQ(parse_a2_response("A, C"), (RiskSet{RiskCategory::LexicalChoice, RiskCategory::WordOrder}));
  EXPECT_EQ(parse_a2_response("Mostly word order and style/register"),
            (RiskSet{RiskCategory::WordOrder, RiskCategory::StyleRegister}));
  EXPECT_TRUE(parse_a2_response("no risks").empty());
  EXPECT_TRUE(parse_a2_detailed("no risks").recognized);
  EXPECT_TRUE(parse_a2_detailed("ANSWER: NONE").recognized);
  EXPECT_FALSE(parse_a2_detailed("E and F").recognized);
  // Capital letters inside words do not count.
  EXPECT_TRUE(parse_a2_response("Because Chinese Differs").empty());
}

TEST(AnalysisPromptTest, TemplatesCarryTheSentence) {
  const std::string p1 = render_a1_prompt("さんまを焼く男");
  const std::string p2 = render_a2_prompt("さんまを焼く男");
  EXPECT_NE(p1.find("Sentence: さんまを焼く男"), std::string::npos);
  EXPECT_NE(p2.find("Sentence: さんまを焼く男"), std::string::npos);
  EXPECT_EQ(p1.find("{SL}"), std::string::npos);
}

TEST(ScriptedJudgeTest, RulesRouteBySentence) {
  ScriptedJudge judge(json{{"id", "fixture"},
                           {"a1", {{"default", "ANSWER: INNER"},
                                   {"rules", {{{"contains", "匂い"}, {"responses", "ANSWER: OUTER"}}}}}},
                           {"a2", {{"default", "ANSWER: B"}}}});
  EXPECT_EQ(classify_nmcc("さんまを焼く男", judge).type, NmccType::Inner);
  EXPECT_EQ(classify_nmcc("さんまを焼く匂い", judge).type, NmccType::Outer);
  EXPECT_EQ(predict_risks("さんまを焼く男", judge).risks, RiskSet{RiskCategory::NmccHandling});
}

TEST(ScriptedJudgeTest, StubContract) {
  ScriptedJudge judge("OUTER", "B");
  const NmccJudgment j = classify_nmcc("任意の文", judge);
  EXPECT_EQ(j.type, NmccType::Outer);
  EXPECT_EQ(j.raw, "OUTER");
  EXPECT_EQ(j.attempts, 1);
}

TEST(ScriptedJudgeTest, ParseRetriesUseTheSamePrompt) {
  ScriptedJudge judge(json{{"a1", {{"default", json::array({"hmm", "maybe", "ANSWER: OUTER"})}}},
                           {"a2", {{"default", "ANSWER: A"}}}});
  const NmccJudgment j = classify_nmcc("文", judge);
  EXPECT_EQ(j.type, NmccType::Outer);
  EXPECT_EQ(j.attempts, 3);
  EXPECT_FALSE(j.parse_failed);
}

TEST(ScriptedJudgeTest, UnparseableRisksGiveEmptySetAndFlag) {
  ScriptedJudge judge("INNER", "E and F");
  const RiskJudgment r = predict_risks("文", judge, AnalysisPolicy{2, {}});
  EXPECT_TRUE(r.risks.empty());
  EXPECT_TRUE(r.parse_failed);
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.raw, "E and F");
}

TEST(ScriptedJudgeTest, RejectsBadScripts) {
  EXPECT_THROW(ScriptedJudge(json{{"a1", {{"default", json::array()}}}}), InvalidArgument);
  EXPECT_THROW(ScriptedJudge(json{{"a1", {{"rules", {{{"responses", "x"}}}}}}}), InvalidArgument);
}

TEST(AnalysisTest, TransportRetriesThenSucceeds) {
  FlakyJudge judge(2, true);
  const AnalysisResult r = analyze("文", judge, AnalysisPolicy{3, RetryPolicy{3, {}, 2.0}});
  EXPECT_EQ(r.a1, NmccType::Outer);
  EXPECT_EQ(r.a2, RiskSet{RiskCategory::LexicalChoice});
  EXPECT_EQ(judge.calls(), 4);
}

TEST(AnalysisTest, TransportExhaustionCarriesAttemptLog) {
  FlakyJudge judge(100, true);
  try {
    classify_nmcc("文", judge, AnalysisPolicy{3, RetryPolicy{2, {}, 2.0}});
    FAIL() << "expected RetriesExhausted";
  } catch (const RetriesExhausted& e) {
    ASSERT_EQ(e.attempts().size(), 3u);
    EXPECT_EQ(e.attempts()[0], "attempt 1: HTTP 503");
  }
}

TEST(AnalysisTest, NonRetriableStopsAtOnce) {
  FlakyJudge judge(100, false);
  EXPECT_THROW(classify_nmcc("文", judge), RetriesExhausted);
  EXPECT_EQ(judge.calls(), 1);
}

TEST(AnalysisTest, EmptySentenceRejected) {
  ScriptedJudge judge("INNER", "A");
  EXPECT_THROW(analyze("  ", judge), InvalidArgument);
}

TEST(AnalysisTest, JsonRoundTrip) {
  ScriptedJudge judge("OUTER", "A, D");
  const AnalysisResult r = analyze("文", judge);
  EXPECT_EQ(analysis_from_json(to_json(r)), r);
  EXPECT_EQ(to_json(r).at("a2"), json::array({"A", "D"}));
}
