#include "ragmt/risk.hpp"

#include "ragmt/text.hpp"

namespace ragmt {

std::string_view to_string(NmccType t) {
  switch (t) {
    case NmccType::Inner: return "inner";
    case NmccType::Outer: return "outer";
    case NmccType::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<NmccType> nmcc_type_from_string(std::string_view s) {
  const std::string lower = text::ascii_lower(s);
  if (lower == "inner") return NmccType::Inner;
  if (lower == "outer") return NmccType::Outer;
  if (lower == "unknown") return NmccType::Unknown;
  return std::nullopt;
}

char letter(RiskCategory c) {
  switch (c) {
    case RiskCategory::LexicalChoice: return 'A';
    case RiskCategory::NmccHandling: return 'B';
    case RiskCategory::WordOrder: return 'C';
    case RiskCategory::StyleRegister: return 'D';
  }
  return '?';
}

std::string_view display_name(RiskCategory c) {
  switch (c) {
    case RiskCategory::LexicalChoice: return "Lexical choice";
    case RiskCategory::NmccHandling: return "NMCC handling";
    case RiskCategory::WordOrder: return "Word order";
    case RiskCategory::StyleRegister: return "Style/register";
  }
  return "";
}

std::string_view key(RiskCategory c) {
  switch (c) {
    case RiskCategory::LexicalChoice: return "lexical_choice";
    case RiskCategory::NmccHandling: return "nmcc_handling";
    case RiskCategory::WordOrder: return "word_order";
    case RiskCategory::StyleRegister: return "style_register";
  }
  return "";
}

std::optional<RiskCategory> risk_from_token(std::string_view token) {
  const std::string t = text::ascii_lower(text::trim(token));
  for (RiskCategory c : kAllRiskCategories) {
    if (t.size() == 1 && t[0] == text::ascii_lower(std::string(1, letter(c)))[0]) {
      return c;
    }
    if (t == key(c) || t == text::ascii_lower(display_name(c))) return c;
  }
  return std::nullopt;
}

std::string join_display_names(const RiskSet& risks) {
  if (risks.empty()) return "none";
  std::string out;
  for (RiskCategory c : risks) {
    if (!out.empty()) out += ", ";
    out += display_name(c);
  }
  return out;
}

std::string join_letters(const RiskSet& risks) {
  std::string out;
  for (RiskCategory c : risks) {
    if (!out.empty()) out += ",";
    out += letter(c);
  }
  return out;
}

}  // namespace ragmt
