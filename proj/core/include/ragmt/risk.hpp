#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ragmt {

/// Inner/outer relation between a noun-modifying clause and its head noun.
/// `Unknown` is only produced when a judgment could not be parsed.
enum class NmccType { Inner, Outer, Unknown };

/// The four pre-translation risk categories, lettered A-D.
enum class RiskCategory { LexicalChoice, NmccHandling, WordOrder, StyleRegister };

using RiskSet = std::set<RiskCategory>;

inline constexpr std::array<RiskCategory, 4> kAllRiskCategories = {
    RiskCategory::LexicalChoice, RiskCategory::NmccHandling,
    RiskCategory::WordOrder, RiskCategory::StyleRegister};

std::string_view to_string(NmccType t);
std::optional<NmccType> nmcc_type_from_string(std::string_view s);

char letter(RiskCategory c);
/// Human-readable label used in prompts ("Lexical choice", ...).
std::string_view display_name(RiskCategory c);
/// Stable snake_case key used in files ("lexical_choice", ...).
std::string_view key(RiskCategory c);

/// Accepts a letter (A-D), a snake_case key, or a display name.
std::optional<RiskCategory> risk_from_token(std::string_view token);

/// "Lexical choice, Word order" in category order; "none" when empty.
std::string join_display_names(const RiskSet& risks);
/// "B,D" in category order; empty when empty.
std::string join_letters(const RiskSet& risks);

}  // namespace ragmt
