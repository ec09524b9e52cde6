#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ragmt/corpus.hpp"
#include "ragmt/retrieval.hpp"
#include "ragmt/risk.hpp"

namespace ragmt {

/// Hard ceiling on the rendered prompt, in code points.
inline constexpr std::size_t kMaxPromptChars = 16000;

/// Enhanced-prompt template with {A1}, {A2}, {EXAMPLES} and {SL}
/// placeholders. Blank-line separated paragraphs are assigned to blocks by
/// the placeholder they carry: role (none), analysis ({A1}/{A2}), examples
/// ({EXAMPLES}), instruction ({SL}).
struct PromptTemplate {
  std::string version;
  std::string text;

  static PromptTemplate builtin(std::string_view version = "enhanced-v1");
  static PromptTemplate from_file(const std::filesystem::path& path, std::string version);
};

struct ExampleLine {
  std::string jp;
  std::string zh;

  /// "(JP)<jp> → (ZH)<zh>"
  std::string render() const;
};

struct EnhancedPrompt {
  std::string role_block;
  std::string analysis_block;
  std::string examples_block;
  std::string instruction_block;
  std::string rendered;
  std::string template_version;

  bool operator==(const EnhancedPrompt&) const = default;
};

nlohmann::json to_json(const EnhancedPrompt& p);
EnhancedPrompt prompt_from_json(const nlohmann::json& j);

/// Renders the four blocks in role, analysis, examples, instruction order,
/// separated by single blank lines. With no hits the examples block is empty
/// and omitted from `rendered`. Hits are listed in the order given, which is
/// rank order for search results. Throws if a hit id is not in `kb` or the
/// result exceeds kMaxPromptChars.
EnhancedPrompt render_prompt(std::string_view sl, NmccType a1, const RiskSet& a2,
                             std::span<const RetrievalHit> hits, const Corpus& kb,
                             const PromptTemplate& tmpl = PromptTemplate::builtin());

/// Role and instruction blocks only; used when analysis is ablated as well.
EnhancedPrompt render_bare_prompt(std::string_view sl,
                                  const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace ragmt
