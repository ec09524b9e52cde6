#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ragmt::templates {

inline constexpr std::string_view kAnalysisVersion = "analysis-v1";
inline constexpr std::string_view kEnhancedVersion = "enhanced-v1";

/// NMCC type prompt with an {SL} placeholder.
std::string_view a1_prompt();
/// Risk prediction prompt with an {SL} placeholder.
std::string_view a2_prompt();
/// Enhanced translation prompt for a shipped version; throws if unknown.
std::string_view enhanced(std::string_view version);

/// Reads a template file, dropping trailing newlines.
std::string load_file(const std::filesystem::path& path);

/// Single-pass substitution of {NAME} placeholders. Unknown names and text
/// inserted by a substitution are left untouched.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace ragmt::templates
