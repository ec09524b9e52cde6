#include "cli_support.hpp"

#include <charconv>
#include <fstream>

#include "ragmt/error.hpp"
#include "ragmt/text.hpp"

namespace ragmt::cli {

using json = nlohmann::json;

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InvalidArgument("override key '" + key + "' has an empty segment");
    if (!node->is_object()) throw InvalidArgument("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string item =
        text::trim(list.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || p != item.data() + item.size()) {
      throw InvalidArgument("bad size '" + item + "' in '" + list + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

EffectiveConfig load_config(const std::optional<std::filesystem::path>& path,
                            const std::vector<std::string>& overrides) {
  EffectiveConfig cfg;
  cfg.raw = json::object();
  if (path) {
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error("cannot open config " + path->string());
    try {
      cfg.raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(path->string() + ": " + e.what());
    }
    cfg.base_dir = path->parent_path().empty() ? std::filesystem::path(".") : path->parent_path();
  }
  for (const auto& o : overrides) apply_override(cfg.raw, o);
  cfg.pipeline = PipelineConfig::from_json(cfg.raw, kServiceKeys);

  if (auto s = cfg.raw.find("service"); s != cfg.raw.end()) {
    if (!s->is_object()) throw InvalidArgument("service must be an object");
    for (const auto& [k, v] : s->items()) {
      if (k != "host" && k != "port" && k != "session_dir" && k != "static_dir") {
        throw InvalidArgument("unknown service key '" + k + "'");
      }
    }
    try {
      cfg.service.host = s->value("host", cfg.service.host);
      cfg.service.port = s->value("port", cfg.service.port);
      if (s->contains("session_dir")) cfg.service.session_dir = cfg.base_dir / s->at("session_dir").get<std::string>();
      if (s->contains("static_dir")) cfg.service.static_dir = cfg.base_dir / s->at("static_dir").get<std::string>();
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("service: ") + e.what());
    }
  }
  return cfg;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace ragmt::cli
