#include "ragmt/templates.hpp"

#include <fstream>
#include <sstream>

#include "embedded_templates.hpp"
#include "ragmt/error.hpp"

namespace ragmt::templates {
namespace {

std::string_view strip_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view a1_prompt() {
  return strip_trailing_newlines(embedded::k_a1_nmcc_type_v1_txt);
}

std::string_view a2_prompt() { return strip_trailing_newlines(embedded::k_a2_risk_v1_txt); }

std::string_view enhanced(std::string_view version) {
  if (version == kEnhancedVersion) return strip_trailing_newlines(embedded::k_enhanced_v1_txt);
  throw InvalidArgument("unknown prompt template version '" + std::string(version) + "'");
}

std::string load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open template file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return std::string(strip_trailing_newlines(os.str()));
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(open));
      break;
    }
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    if (auto it = values.find(name); it != values.end()) {
      out += it->second;
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  return out;
}

}  // namespace ragmt::templates
