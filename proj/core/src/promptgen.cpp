#include "ragmt/promptgen.hpp"

#include <array>
#include <vector>

#include "ragmt/error.hpp"
#include "ragmt/templates.hpp"
#include "ragmt/text.hpp"

namespace ragmt {
namespace {

using json = nlohmann::json;

enum Block { kRole = 0, kAnalysis = 1, kExamples = 2, kInstruction = 3 };

struct SplitTemplate {
  std::array<std::string, 4> blocks;
};

bool has(std::string_view s, std::string_view needle) {
  return s.find(needle) != std::string_view::npos;
}

SplitTemplate split_template(const PromptTemplate& tmpl) {
  std::vector<std::string> paragraphs;
  std::size_t start = 0;
  const std::string& t = tmpl.text;
  for (;;) {
    const auto sep = t.find("\n\n", start);
    paragraphs.push_back(t.substr(start, sep - start));
    if (sep == std::string::npos) break;
    start = sep + 2;
  }

  SplitTemplate out;
  int current = kRole;
  std::array<bool, 4> seen{};
  for (const auto& para : paragraphs) {
    int block = current;
    if (has(para, "{SL}")) {
      block = kInstruction;
    } else if (has(para, "{EXAMPLES}")) {
      block = kExamples;
    } else if (has(para, "{A1}") || has(para, "{A2}")) {
      block = kAnalysis;
    }
    if (block < current) {
      throw InvalidArgument("prompt template " + tmpl.version +
                            ": blocks must appear as role, analysis, examples, instruction");
    }
    current = block;
    seen[static_cast<std::size_t>(block)] = true;
    auto& dst = out.blocks[static_cast<std::size_t>(block)];
    if (!dst.empty()) dst += "\n\n";
    dst += para;
  }
  if (!seen[kRole] || !seen[kAnalysis] || !seen[kExamples] || !seen[kInstruction]) {
    throw InvalidArgument("prompt template " + tmpl.version +
                          ": needs role, {A1}/{A2}, {EXAMPLES} and {SL} paragraphs");
  }
  return out;
}

EnhancedPrompt assemble(EnhancedPrompt p) {
  for (const std::string* block :
       {&p.role_block, &p.analysis_block, &p.examples_block, &p.instruction_block}) {
    if (block->empty()) continue;
    if (!p.rendered.empty()) p.rendered += "\n\n";
    p.rendered += *block;
  }
  const std::size_t chars = text::to_u32(p.rendered).size();
  if (chars > kMaxPromptChars) {
    throw InvalidArgument("rendered prompt has " + std::to_string(chars) +
                          " characters, above the limit of " + std::to_string(kMaxPromptChars));
  }
  return p;
}

}  // namespace

PromptTemplate PromptTemplate::builtin(std::string_view version) {
  return PromptTemplate{std::string(version), std::string(templates::enhanced(version))};
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path, std::string version) {
  return PromptTemplate{std::move(version), templates::load_file(path)};
}

std::string ExampleLine::render() const { return "(JP)" + jp + " → (ZH)" + zh; }

json to_json(const EnhancedPrompt& p) {
  return {{"role_block", p.role_block},
          {"analysis_block", p.analysis_block},
          {"examples_block", p.examples_block},
          {"instruction_block", p.instruction_block},
          {"rendered", p.rendered},
          {"template_version", p.template_version}};
}

EnhancedPrompt prompt_from_json(const json& j) {
  return EnhancedPrompt{j.at("role_block").get<std::string>(),
                        j.at("analysis_block").get<std::string>(),
                        j.at("examples_block").get<std::string>(),
                        j.at("instruction_block").get<std::string>(),
                        j.at("rendered").get<std::string>(),
                        j.at("template_version").get<std::string>()};
}

EnhancedPrompt render_prompt(std::string_view sl, NmccType a1, const RiskSet& a2,
                             std::span<const RetrievalHit> hits, const Corpus& kb,
                             const PromptTemplate& tmpl) {
  if (sl.empty()) throw InvalidArgument("render_prompt: empty source sentence");
  const SplitTemplate split = split_template(tmpl);

  std::string examples;
  for (const auto& hit : hits) {
    const SentencePair* pair = kb.find(hit.pair_id);
    if (pair == nullptr) {
      throw InvalidArgument("retrieval hit '" + hit.pair_id +
                            "' does not resolve to a knowledge-base pair");
    }
    if (!examples.empty()) examples += '\n';
    examples += ExampleLine{pair->source_ja, pair->target_zh}.render();
  }

  const std::map<std::string, std::string> values = {
      {"A1", std::string(to_string(a1))},
      {"A2", join_display_names(a2)},
      {"EXAMPLES", examples},
      {"SL", std::string(sl)},
  };
  EnhancedPrompt p;
  p.template_version = tmpl.version;
  p.role_block = templates::fill(split.blocks[kRole], values);
  p.analysis_block = templates::fill(split.blocks[kAnalysis], values);
  if (!hits.empty()) p.examples_block = templates::fill(split.blocks[kExamples], values);
  p.instruction_block = templates::fill(split.blocks[kInstruction], values);
  return assemble(std::move(p));
}

EnhancedPrompt render_bare_prompt(std::string_view sl, const PromptTemplate& tmpl) {
  if (sl.empty()) throw InvalidArgument("render_bare_prompt: empty source sentence");
  const SplitTemplate split = split_template(tmpl);
  const std::map<std::string, std::string> values = {{"SL", std::string(sl)}};
  EnhancedPrompt p;
  p.template_version = tmpl.version;
  p.role_block = templates::fill(split.blocks[kRole], values);
  p.instruction_block = templates::fill(split.blocks[kInstruction], values);
  return assemble(std::move(p));
}

}  // namespace ragmt
