#include <gtest/gtest.h>

#include "ragmt/config.hpp"
#include "ragmt/error.hpp"

using namespace ragmt;
using json = nlohmann::json;

TEST(ConfigTest, DefaultsRoundTrip) {
  const PipelineConfig c;
  EXPECT_EQ(c.retriever.k, 5u);
  EXPECT_EQ(c.sizes, (std::vector<std::size_t>{0, 100, 200, 500, 1000, 2000}));
  EXPECT_DOUBLE_EQ(c.smoothing_epsilon, 0.1);
  EXPECT_FALSE(c.bare_baseline);
  EXPECT_EQ(PipelineConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(ConfigTest, UnknownKeysRejectedUnlessPassedThrough) {
  EXPECT_THROW(PipelineConfig::from_json(json{{"sizez", {0}}}), InvalidArgument);
  EXPECT_NO_THROW(PipelineConfig::from_json(json{{"service", {{"port", 1}}}}, {"service"}));
  EXPECT_THROW(PipelineConfig::from_json(json{{"seed", "seven"}}), InvalidArgument);
}

TEST(ConfigTest, Validate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate(2000));
  EXPECT_THROW(c.validate(1999), InvalidArgument);
  c.sizes = {0, 200, 100};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.sizes = {0, 100};
  c.smoothing_epsilon = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(ConfigTest, SnapshotsDifferOnlyInSize) {
  const PipelineConfig c;
  const json a = c.condition_snapshot(100, "kb", "test");
  const json b = c.condition_snapshot(200, "kb", "test");
  const json patch = json::diff(a, b);
  ASSERT_EQ(patch.size(), 1u);
  EXPECT_EQ(patch[0].at("path"), "/kb_size");
  EXPECT_FALSE(a.contains("sizes"));
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(c.condition_snapshot(100, "kb", "test")));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(ConfigTest, MakeBackendsForStubs) {
  PipelineConfig c;
  Backends b = make_backends(c);
  EXPECT_EQ(b.generator->descriptor().kind, "copy-stub");
  EXPECT_EQ(b.encoder->dim(), 64u);
  EXPECT_EQ(b.judge->judge({AnalysisTask::NmccType, "文", "p", 0}), "ANSWER: INNER");

  c.generation_backend = {{"kind", "fixed-stub"}, {"text", "你好"}};
  c.analysis_backend = {{"kind", "scripted-stub"}, {"script", {{"a1", {{"default", "ANSWER: OUTER"}}}, {"a2", {{"default", "ANSWER: C"}}}}}};
  b = make_backends(c);
  EXPECT_EQ(b.generator->generate("x"), "你好");
  EXPECT_EQ(b.judge->judge({AnalysisTask::RiskPrediction, "文", "p", 0}), "ANSWER: C");

  c.generation_backend = {{"kind", "teleport"}};
  EXPECT_THROW(make_backends(c), InvalidArgument);
}

TEST(ConfigTest, RemoteBackendsConstructWithoutNetwork) {
  PipelineConfig c;
  c.generation_backend = {{"kind", "remote-llm"}, {"model", "gpt-4o"}};
  c.analysis_backend = {{"kind", "remote-llm"}, {"model", "gpt-4o"}};
  c.encoder = {{"kind", "remote"}, {"model", "text-embedding-ada-002"}, {"dim", 1536}};
  const Backends b = make_backends(c);
  EXPECT_EQ(b.generator->descriptor().model_id, "gpt-4o");
  EXPECT_EQ(b.encoder->dim(), 1536u);
  EXPECT_EQ(b.judge->id(), "remote-llm:gpt-4o");
}
