#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/analysis.hpp"
#include "ragmt/generation.hpp"
#include "ragmt/promptgen.hpp"
#include "ragmt/retrieval.hpp"

namespace ragmt {

struct ReportOptions {
  /// Test ids for the per-case comparison; empty means the first two.
  std::vector<std::string> case_ids;
  std::vector<std::size_t> case_sizes = {0, 200, 2000};
};

/// Everything that defines an experiment. Backend sections are kept as JSON
/// so new backend kinds need no schema change:
///
///   analysis_backend:   {"kind": "scripted-stub", "script": {...}}
///                       {"kind": "remote-llm", "model": "gpt-4o", ...}
///   generation_backend: {"kind": "copy-stub"} | {"kind": "fixed-stub", "text": "..."}
///                       {"kind": "remote-llm", "model": "gpt-4o", "params": {...}}
///   encoder:            {"kind": "mock", "dim": 64, "seed": 7}
///                       {"kind": "remote", "model": "text-embedding-ada-002", "dim": 1536}
struct PipelineConfig {
  RetrieverConfig retriever;
  nlohmann::json analysis_backend = {{"kind", "scripted-stub"}};
  nlohmann::json generation_backend = {{"kind", "copy-stub"}};
  nlohmann::json encoder = {{"kind", "mock"}, {"dim", 64}, {"seed", 7}};
  std::string template_version = "enhanced-v1";
  double smoothing_epsilon = 0.1;
  std::vector<std::size_t> sizes = {0, 100, 200, 500, 1000, 2000};
  std::uint64_t seed = 7;
  bool bare_baseline = false;
  int max_concurrency = 4;
  int max_retries = 3;
  int retry_backoff_ms = 0;
  ReportOptions report;

  nlohmann::json to_json() const;
  /// Rejects unknown keys except those listed in `passthrough_keys`.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::vector<std::string>& passthrough_keys = {});

  /// Sizes ascending, unique, and each at most `kb_size` when given.
  void validate(std::optional<std::size_t> kb_size = std::nullopt) const;

  /// Experimental settings for one condition: everything except the size
  /// list and report options, plus the effective size and corpus stamps.
  nlohmann::json condition_snapshot(std::size_t kb_size, const std::string& kb_fingerprint,
                                    const std::string& test_fingerprint) const;
};

/// Short SHA-256 of the canonical JSON dump.
std::string config_hash(const nlohmann::json& snapshot);

/// Default script for the scripted analysis backend.
nlohmann::json default_judge_script();

struct Backends {
  std::shared_ptr<JudgmentBackend> judge;
  std::shared_ptr<GenerationBackend> generator;
  std::shared_ptr<Encoder> encoder;
  std::shared_ptr<EmbeddingCache> cache;
  PromptTemplate prompt_template;
  AnalysisPolicy analysis_policy;
  RetryPolicy retry;
};

struct BackendOptions {
  /// Persistent embedding cache file; memory-only when empty.
  std::optional<std::filesystem::path> cache_path;
  /// Custom enhanced-prompt template file (version taken from the config).
  std::optional<std::filesystem::path> template_path;
  /// Base for relative paths inside backend sections (script_path).
  std::filesystem::path base_dir = ".";
};

Backends make_backends(const PipelineConfig& cfg, const BackendOptions& opts = {});

}  // namespace ragmt
