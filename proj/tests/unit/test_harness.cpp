#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/synthetic.hpp"
#include "../support/temp_dir.hpp"
#include "ragmt/error.hpp"
#include "ragmt/harness.hpp"

using namespace ragmt;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = ragmt::testing::make_synthetic(4, 120, 99);
    cfg_.sizes = {0, 60, 120};
    cfg_.max_concurrency = 2;
    dir_ = ragmt::testing::scratch_dir("ragmt_harness");
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ragmt::testing::SyntheticData data_;
  PipelineConfig cfg_;
  fs::path dir_;
};

class ThrowingGenerator final : public GenerationBackend {
 public:
  GenerationDescriptor descriptor() const override { return {"broken", "broken", {}}; }
  std::string generate(const std::string&) override { throw TransportError("connection refused"); }
};

class ThrowingEncoder final : public Encoder {
 public:
  std::string id() const override { return "broken"; }
  std::size_t dim() const override { return 8; }
  std::vector<double> encode(std::string_view) override { throw TransportError("no route"); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_F(HarnessTest, SweepRowsAndBaseline) {
  Backends b = make_backends(cfg_);
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.valid);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_bleu, 0.0);
  EXPECT_FALSE(r.rows[0].abs_gain.has_value());
  EXPECT_FALSE(r.rows[2].rel_gain_pct.has_value());
  ASSERT_TRUE(r.rows[2].abs_gain.has_value());
  EXPECT_DOUBLE_EQ(*r.rows[2].abs_gain, r.rows[2].mean_bleu);
  EXPECT_DOUBLE_EQ(r.rows[2].mean_bleu, 100.0);
  EXPECT_TRUE(r.condition(0)->outcomes[0].hits.empty());
  EXPECT_EQ(r.condition(120)->outcomes[0].hits.size(), cfg_.retriever.k);
  EXPECT_EQ(r.condition(7), nullptr);
}

TEST_F(HarnessTest, RejectsBadSizes) {
  Backends b = make_backends(cfg_);
  cfg_.sizes = {60, 120};
  EXPECT_THROW(sweep(data_.test, data_.kb, cfg_, b), InvalidArgument);
  cfg_.sizes = {0, 500};
  EXPECT_THROW(sweep(data_.test, data_.kb, cfg_, b), InvalidArgument);
  cfg_.sizes = {0, 60};
  EXPECT_THROW(run_condition(data_.test, data_.kb, 30, cfg_, b), InvalidArgument);
}

TEST_F(HarnessTest, ResumeReusesLoggedRecords) {
  const fs::path log = dir_ / "run.jsonl";
  Backends first = make_backends(cfg_);
  const SweepReport a = sweep(data_.test, data_.kb, cfg_, first, {log, true});

  Backends second = make_backends(cfg_);
  auto counter = std::make_shared<ragmt::testing::CountingGenerator>(second.generator);
  second.generator = counter;
  const SweepReport b = sweep(data_.test, data_.kb, cfg_, second, {log, true});
  EXPECT_EQ(counter->calls(), 0);
  EXPECT_TRUE(b.conditions[1].outcomes[0].reused);
  EXPECT_EQ(a.to_json(), b.to_json());

  const SweepReport c = sweep(data_.test, data_.kb, cfg_, second, {log, false});
  EXPECT_EQ(counter->calls(), static_cast<int>(3 * data_.test.size()));
  EXPECT_EQ(a.to_json(), c.to_json());
}

TEST_F(HarnessTest, ResumeIgnoresTornAndForeignLines) {
  const fs::path log = dir_ / "run.jsonl";
  Backends b = make_backends(cfg_);
  sweep(data_.test, data_.kb, cfg_, b, {log, true});
  const ResumeStore clean = ResumeStore::load(log);
  EXPECT_EQ(clean.size(), 3 * data_.test.size());
  {
    std::ofstream out(log, std::ios::app);
    out << "{\"note\":\"foreign\"}\n{\"test_id\":\"t1\",\"si";
  }
  EXPECT_EQ(ResumeStore::load(log).size(), clean.size());
  EXPECT_EQ(ResumeStore::load(dir_ / "missing.jsonl").size(), 0u);
}

TEST_F(HarnessTest, ChangedSettingsAreNotResumed) {
  const fs::path log = dir_ / "run.jsonl";
  Backends b = make_backends(cfg_);
  sweep(data_.test, data_.kb, cfg_, b, {log, true});
  cfg_.retriever.k = 3;
  Backends again = make_backends(cfg_);
  auto counter = std::make_shared<ragmt::testing::CountingGenerator>(again.generator);
  again.generator = counter;
  sweep(data_.test, data_.kb, cfg_, again, {log, true});
  EXPECT_EQ(counter->calls(), static_cast<int>(3 * data_.test.size()));
}

TEST_F(HarnessTest, GenerationFailureIsTaggedAndInvalidates) {
  cfg_.max_retries = 1;
  Backends b = make_backends(cfg_);
  b.retry.max_retries = 1;
  b.generator = std::make_shared<ThrowingGenerator>();
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  EXPECT_FALSE(r.valid);
  EXPECT_DOUBLE_EQ(r.conditions[0].completion, 0.0);
  EXPECT_NE(r.conditions[0].outcomes[0].error.find("[generation]"), std::string::npos);
  EXPECT_NE(table1_markdown(r).find("WARNING"), std::string::npos);
  EXPECT_NE(scores_jsonl(r).find("\"error\""), std::string::npos);
}

TEST_F(HarnessTest, IndexFailureRaisesStageError) {
  Backends b = make_backends(cfg_);
  b.retry.max_retries = 0;
  b.encoder = std::make_shared<ThrowingEncoder>();
  try {
    run_condition(data_.test, data_.kb, 60, cfg_, b);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "index");
  }
  EXPECT_NO_THROW(run_condition(data_.test, data_.kb, 0, cfg_, b));
}

TEST_F(HarnessTest, RunSentenceStages) {
  Backends b = make_backends(cfg_);
  const SentenceRun run = run_sentence("x", "駅前で花を売っている女性に道を尋ねた", {}, cfg_, b);
  ASSERT_TRUE(run.analysis.has_value());
  EXPECT_FALSE(run.record.prompt.analysis_block.empty());
  EXPECT_EQ(run.record.output_zh, CopyStub::kNoReference);
  EXPECT_THROW(run_sentence("x", "  ", {}, cfg_, b), InvalidArgument);

  cfg_.bare_baseline = true;
  const SentenceRun bare = run_sentence("x", "駅前で花を売っている女性に道を尋ねた", {}, cfg_, b);
  EXPECT_FALSE(bare.analysis.has_value());
  EXPECT_TRUE(bare.record.prompt.analysis_block.empty());
}

TEST_F(HarnessTest, AnalysisHeldFixedAcrossSizes) {
  Backends b = make_backends(cfg_);
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  for (std::size_t t = 0; t < data_.test.size(); ++t) {
    const auto& base = r.conditions[0].outcomes[t].analysis;
    for (const auto& c : r.conditions) EXPECT_EQ(c.outcomes[t].analysis->a1, base->a1);
  }
}

TEST_F(HarnessTest, GainTableFormats) {
  Backends b = make_backends(cfg_);
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  const std::string md = table1_markdown(r);
  EXPECT_EQ(md.rfind("<!-- config_hash: " + r.config_hash + " -->\n", 0), 0u);
  EXPECT_NE(md.find("| 0 (RAG disabled) | 0.00 | — | — |"), std::string::npos);
  EXPECT_NE(md.find("| 120 | 100.00 | +100.00 | — |"), std::string::npos);
  const std::string csv = table1_csv(r);
  EXPECT_NE(csv.find("120,100.00,+100.00,,1.0000," + r.config_hash), std::string::npos);
}

TEST_F(HarnessTest, CaseReport) {
  Backends b = make_backends(cfg_);
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  EXPECT_EQ(case_report(r, {}, {0, 120}), "");
  const std::string cases = case_report(r, {"t2"}, {0, 120}, &data_.test);
  EXPECT_NE(cases.find("### t2"), std::string::npos);
  EXPECT_NE(cases.find("SL: " + data_.test.pairs[1].source_ja), std::string::npos);
  EXPECT_NE(cases.find("| RAG=120 | 100.00 | " + data_.test.pairs[1].target_zh + " |"),
            std::string::npos);
  EXPECT_THROW(case_report(r, {"nope"}, {0}), InvalidArgument);
  EXPECT_THROW(case_report(r, {"t1"}, {5}), InvalidArgument);
}

TEST_F(HarnessTest, ArtifactsWritten) {
  Backends b = make_backends(cfg_);
  const SweepReport r = sweep(data_.test, data_.kb, cfg_, b);
  write_sweep_artifacts(r, dir_ / "out", data_.test, json{{"cli", true}});
  for (const char* f : {"report.json", "table1.md", "table1.csv", "scores.jsonl", "cases.md"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  const json report = json::parse(slurp(dir_ / "out" / "report.json"));
  EXPECT_EQ(report.at("format"), "ragmt-sweep-report/1");
  EXPECT_EQ(report.at("invocation").at("cli"), true);
  EXPECT_EQ(report.at("per_sentence").size(), data_.test.size());

  std::istringstream scores(slurp(dir_ / "out" / "scores.jsonl"));
  std::size_t sentences = 0, summaries = 0;
  for (std::string line; std::getline(scores, line);) {
    const json row = json::parse(line);
    (row.at("kind") == "summary" ? summaries : sentences)++;
    EXPECT_DOUBLE_EQ(row.at("epsilon").get<double>(), 0.1);
  }
  EXPECT_EQ(sentences, 3 * data_.test.size());
  EXPECT_EQ(summaries, 3u);
  EXPECT_NE(slurp(dir_ / "out" / "cases.md").find("### t1"), std::string::npos);
}

TEST_F(HarnessTest, ContaminationAbortsBeforeGeneration) {
  data_.kb.pairs[5].source_ja = data_.test.pairs[2].source_ja;
  Backends b = make_backends(cfg_);
  auto counter = std::make_shared<ragmt::testing::CountingGenerator>(b.generator);
  b.generator = counter;
  try {
    sweep(data_.test, data_.kb, cfg_, b);
    FAIL() << "expected ContaminationError";
  } catch (const ContaminationError& e) {
    ASSERT_EQ(e.report().exact_matches.size(), 1u);
    EXPECT_EQ(e.report().exact_matches[0].test_id, "t3");
  }
  EXPECT_EQ(counter->calls(), 0);
}
