#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracles/bleu_oracle.hpp"
#include "ragmt/bleu.hpp"
#include "ragmt/error.hpp"

using namespace ragmt;

TEST(TokenizeTest, CharactersWithoutWhitespaceCasePreserved) {
  EXPECT_EQ(tokenize_chars("他 写的\t信 Ab"), U"他写的信Ab");
  EXPECT_EQ(tokenize_chars("が"), U"が");
  EXPECT_TRUE(tokenize_chars(" \n").empty());
}

TEST(SentenceBleuTest, Identity) {
  const BleuScore s = sentence_bleu(U"ABCD", U"ABCD");
  EXPECT_DOUBLE_EQ(s.score, 100.0);
  EXPECT_FALSE(s.smoothing_applied);
  EXPECT_DOUBLE_EQ(s.bp, 1.0);
}

TEST(SentenceBleuTest, BrevityPenalty) {
  const BleuScore s = sentence_bleu(U"ABCD", U"ABCDEF");
  for (double p : s.precisions) EXPECT_DOUBLE_EQ(p, 1.0);
  EXPECT_NEAR(s.bp, 0.60653, 1e-5);
  EXPECT_EQ(format_fixed(s.score, 2), "60.65");
  EXPECT_EQ(s.hyp_len, 4u);
  EXPECT_EQ(s.ref_len, 6u);
}

TEST(SentenceBleuTest, ShortHypothesisSmoothing) {
  const BleuScore s = sentence_bleu(U"AB", U"AB");
  EXPECT_DOUBLE_EQ(s.precisions[2], 0.1);
  EXPECT_DOUBLE_EQ(s.precisions[3], 0.1);
  EXPECT_EQ(s.totals[2], 1u);
  EXPECT_TRUE(s.smoothing_applied);
  EXPECT_EQ(format_fixed(s.score, 2), "31.62");
}

TEST(SentenceBleuTest, ClippingAndZeroUnigrams) {
  const BleuScore s = sentence_bleu(U"AAAA", U"AB");
  EXPECT_EQ(s.matches[0], 1u);
  EXPECT_DOUBLE_EQ(s.precisions[0], 0.25);
  EXPECT_DOUBLE_EQ(sentence_bleu(U"XYZ", U"ABC").score, 0.0);
  EXPECT_DOUBLE_EQ(sentence_bleu(U"", U"ABC").score, 0.0);
  EXPECT_THROW(sentence_bleu(U"A", U""), InvalidArgument);
  EXPECT_THROW(sentence_bleu(U"A", U"A", 0.0), InvalidArgument);
}

TEST(SentenceBleuTest, CaseSensitive) {
  EXPECT_LT(sentence_bleu(U"abcd", U"ABCD").score, 100.0);
}

TEST(SentenceBleuTest, EpsilonChangesScore) {
  EXPECT_NE(sentence_bleu(U"AB", U"AB", 0.1).score, sentence_bleu(U"AB", U"AB", 0.01).score);
}

TEST(SentenceBleuTest, MatchesOracleAndBounds) {
  std::mt19937_64 rng(17);
  const std::u32string pool = U"的一是了我不人在他有这中大来上个国到说们为子和你地出道也时年ABCxyz,。";
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string h, r;
    const std::size_t width = 3 + rng() % pool.size();
    for (std::size_t i = 0, n = rng() % 25; i < n; ++i) h.push_back(pool[rng() % width]);
    for (std::size_t i = 0, n = 1 + rng() % 25; i < n; ++i) r.push_back(pool[rng() % width]);
    const double eps = trial % 2 ? 0.1 : 0.5;
    const BleuScore got = sentence_bleu(h, r, eps);
    const auto want = oracle::bleu(h, r, eps);
    ASSERT_NEAR(got.score, want.score, 1e-9) << "trial " << trial;
    EXPECT_GE(got.score, 0.0);
    EXPECT_LE(got.score, 100.0);
    EXPECT_GT(got.bp, 0.0);
    EXPECT_LE(got.bp, 1.0);
  }
}

TEST(MacroAverageTest, Mean) {
  const std::vector<double> v{10.0, 20.0, 60.0};
  EXPECT_DOUBLE_EQ(macro_average(v), 30.0);
  EXPECT_THROW(macro_average(std::vector<double>{}), InvalidArgument);
}

TEST(GainsTest, PrintedRowFiveHundred) {
  const Gain g = gains(26.77, 24.28);
  EXPECT_EQ(format_abs_gain(g.absolute), "+2.49");
  EXPECT_EQ(format_rel_gain(g.relative_pct), "+10.3%");
  EXPECT_THROW(gains(1.0, 0.0), InvalidArgument);
  EXPECT_EQ(format_abs_gain(-0.5), "-0.50");
  EXPECT_EQ(format_fixed(-0.0001, 2), "0.00");
}

TEST(BleuScoreTest, JsonRoundTrip) {
  const BleuScore s = sentence_bleu(U"ABCE", U"ABCDEF");
  const BleuScore back = BleuScore::from_json(s.to_json());
  EXPECT_EQ(back.score, s.score);
  EXPECT_EQ(back.precisions, s.precisions);
  EXPECT_EQ(back.matches, s.matches);
}
