#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/config.hpp"

namespace ragmt::cli {

/// Top-level config keys that are not part of the experiment itself.
inline const std::vector<std::string> kServiceKeys = {"service"};

struct ServiceSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path session_dir = "sessions";
  std::optional<std::filesystem::path> static_dir;
};

struct EffectiveConfig {
  nlohmann::json raw;  ///< file config with overrides applied
  PipelineConfig pipeline;
  ServiceSettings service;
  std::filesystem::path base_dir = ".";
};

/// "a.b.c=value". The value is parsed as JSON when it parses, else kept as
/// a string. Throws InvalidArgument on a malformed assignment.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Comma-separated non-negative integers.
std::vector<std::size_t> parse_sizes(const std::string& list);

EffectiveConfig load_config(const std::optional<std::filesystem::path>& path,
                            const std::vector<std::string>& overrides);

/// Plain-text lines, one sentence per line; a trailing newline adds no line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace ragmt::cli
