#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "ragmt/error.hpp"
#include "ragmt/promptgen.hpp"

using namespace ragmt;
namespace fs = std::filesystem;

namespace {

Corpus kb5() {
  Corpus kb;
  for (int i = 1; i <= 5; ++i) {
    kb.pairs.push_back({"k" + std::to_string(i), "例文" + std::to_string(i), "例句" + std::to_string(i), {}});
  }
  return kb;
}

std::vector<RetrievalHit> hits_for(const std::vector<std::string>& ids) {
  std::vector<RetrievalHit> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], 0.0, 1.0, i + 1});
  return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(PromptTest, OneHitPrompt) {
  const auto p = render_prompt("さんまを焼く男", NmccType::Inner, {RiskCategory::NmccHandling}, hits_for({"k2"}), kb5());
  EXPECT_EQ(p.rendered.rfind("You are a professional Japanese→Chinese translation expert.", 0), 0u);
  EXPECT_EQ(count(p.rendered, "(JP)"), 1u);
  EXPECT_NE(p.rendered.find("(JP)例文2 → (ZH)例句2"), std::string::npos);
  EXPECT_EQ(p.analysis_block, "NMCC type (A1): inner\n\nPredicted error risks (A2): NMCC handling");
  EXPECT_EQ(p.template_version, "enhanced-v1");
}

TEST(PromptTest, NoHitsDropsExamplesBlock) {
  const auto p = render_prompt("さんまを焼く匂い", NmccType::Outer, {}, {}, kb5());
  EXPECT_TRUE(p.examples_block.empty());
  EXPECT_EQ(p.rendered.find("(JP)"), std::string::npos);
  EXPECT_EQ(p.rendered.find("Refer to the following"), std::string::npos);
  EXPECT_NE(p.analysis_block.find("(A2): none"), std::string::npos);
}

TEST(PromptTest, ExampleLinesFollowHitOrder) {
  const auto p = render_prompt("文", NmccType::Inner, {}, hits_for({"k4", "k1", "k5", "k3", "k2"}), kb5());
  EXPECT_EQ(count(p.rendered, "(JP)"), 5u);
  const auto a = p.rendered.find("例文4"), b = p.rendered.find("例文1"), c = p.rendered.find("例文5"),
             d = p.rendered.find("例文3"), e = p.rendered.find("例文2");
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_LT(c, d);
  EXPECT_LT(d, e);
}

TEST(PromptTest, ErrorsOnBrokenLinkageAndEmptySource) {
  EXPECT_THROW(render_prompt("文", NmccType::Inner, {}, hits_for({"missing"}), kb5()), InvalidArgument);
  EXPECT_THROW(render_prompt("", NmccType::Inner, {}, {}, kb5()), InvalidArgument);
}

TEST(PromptTest, LengthCeiling) {
  Corpus kb;
  kb.pairs.push_back({"long", std::string(3 * 9000, 'x'), "y", {}});
  EXPECT_THROW(render_prompt("文", NmccType::Inner, {}, hits_for({"long"}), kb), InvalidArgument);
}

TEST(PromptTest, PureFunction) {
  const auto a = render_prompt("文", NmccType::Outer, {RiskCategory::WordOrder}, hits_for({"k1", "k2"}), kb5());
  const auto b = render_prompt("文", NmccType::Outer, {RiskCategory::WordOrder}, hits_for({"k1", "k2"}), kb5());
  EXPECT_EQ(a, b);
  EXPECT_EQ(prompt_from_json(to_json(a)), a);
}

TEST(PromptTest, BarePromptHasRoleAndInstructionOnly) {
  const auto p = render_bare_prompt("文");
  EXPECT_TRUE(p.analysis_block.empty());
  EXPECT_EQ(p.rendered, p.role_block + "\n\n" + p.instruction_block);
}

TEST(PromptTemplateTest, CustomTemplateFile) {
  const fs::path path = fs::temp_directory_path() / ("ragmt-unit-template-" + std::to_string(::getpid()) + ".txt");
  { std::ofstream(path) << "Role.\n\nA1={A1} A2={A2}\n\nEx:\n{EXAMPLES}\n\nGo: {SL}\n\n"; }
  const auto tmpl = PromptTemplate::from_file(path, "custom-1");
  const auto p = render_prompt("文", NmccType::Inner, {}, hits_for({"k1"}), kb5(), tmpl);
  EXPECT_EQ(p.rendered, "Role.\n\nA1=inner A2=none\n\nEx:\n(JP)例文1 → (ZH)例句1\n\nGo: 文");
  EXPECT_EQ(p.template_version, "custom-1");
  fs::remove(path);
}

TEST(PromptTemplateTest, RejectsMisorderedOrIncompleteTemplates) {
  EXPECT_THROW(render_prompt("文", NmccType::Inner, {}, {}, kb5(), PromptTemplate{"x", "Role\n\n{SL}\n\n{A1}\n\n{EXAMPLES}"}),
               InvalidArgument);
  EXPECT_THROW(render_prompt("文", NmccType::Inner, {}, {}, kb5(), PromptTemplate{"x", "Role\n\n{A1}\n\n{SL}"}),
               InvalidArgument);
  EXPECT_THROW(PromptTemplate::builtin("enhanced-v9"), InvalidArgument);
}
