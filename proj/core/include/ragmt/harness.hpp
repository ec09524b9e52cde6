#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/analysis.hpp"
#include "ragmt/bleu.hpp"
#include "ragmt/config.hpp"
#include "ragmt/corpus.hpp"
#include "ragmt/generation.hpp"
#include "ragmt/retrieval.hpp"

namespace ragmt {

/// A module failure tagged with the pipeline stage it came from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// The test set overlaps the knowledge base; raised before any backend call.
class ContaminationError : public Error {
 public:
  explicit ContaminationError(ContaminationReport report);
  const ContaminationReport& report() const noexcept { return report_; }

 private:
  ContaminationReport report_;
};

/// Per-sentence analysis shared by every condition of a sweep, so A1/A2 is
/// judged once per sentence and held fixed across sizes.
class AnalysisMemo {
 public:
  AnalysisResult get(std::string_view sentence, JudgmentBackend& backend,
                     const AnalysisPolicy& policy);
  void put(std::string sentence, AnalysisResult result);

 private:
  std::mutex mutex_;
  std::map<std::string, AnalysisResult, std::less<>> results_;
};

struct SentenceRun {
  std::optional<AnalysisResult> analysis;  ///< empty for the bare baseline
  std::vector<RetrievalHit> hits;
  TranslationRecord record;
};

/// Knowledge base for one condition; `index` is null for size 0.
struct ConditionKb {
  const Corpus* corpus = nullptr;
  const VectorIndex* index = nullptr;
};

/// analysis -> retrieval (when an index is present) -> prompt -> generation.
/// With no index the examples block is empty; A1/A2 are still rendered
/// unless cfg.bare_baseline is set.
SentenceRun run_sentence(std::string_view test_id, std::string_view sl, const ConditionKb& kb,
                         const PipelineConfig& cfg, Backends& backends,
                         AnalysisMemo* memo = nullptr);

struct SentenceOutcome {
  std::string test_id;
  std::optional<TranslationRecord> record;
  std::optional<AnalysisResult> analysis;
  std::vector<RetrievalHit> hits;
  std::optional<BleuScore> score;
  std::string error;
  bool reused = false;
};

struct ConditionResult {
  std::size_t size = 0;
  std::vector<SentenceOutcome> outcomes;
  double mean_bleu = 0.0;
  double completion = 0.0;
  nlohmann::json config_snapshot;
  std::string config_hash;

  bool complete() const noexcept { return completion == 1.0; }
};

/// Records from earlier runs keyed by (test_id, size, condition hash).
class ResumeStore {
 public:
  using Key = std::tuple<std::string, std::size_t, std::string>;
  struct Entry {
    TranslationRecord record;
    std::optional<AnalysisResult> analysis;
    std::vector<RetrievalHit> hits;
  };

  /// Loads a run log; missing files give an empty store.
  static ResumeStore load(const std::filesystem::path& run_log);
  const Entry* find(const std::string& test_id, std::size_t size, const std::string& hash) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<Key, Entry> entries_;
};

struct ConditionOptions {
  RunLog* log = nullptr;
  const ResumeStore* resume = nullptr;
  AnalysisMemo* memo = nullptr;
};

/// Builds the size-`size` nested subset and its index (skipped for 0), then
/// translates and scores every test sentence. Throws ContaminationError
/// before any backend call if the corpora overlap.
ConditionResult run_condition(const Corpus& test, const Corpus& kb, std::size_t size,
                              const PipelineConfig& cfg, Backends& backends,
                              const ConditionOptions& opts = {});

struct SweepReport {
  nlohmann::json config;
  std::string config_hash;
  std::string kb_fingerprint;
  std::string test_fingerprint;
  std::size_t kb_size = 0;
  std::vector<std::string> test_ids;
  std::vector<GainRow> rows;
  std::vector<ConditionResult> conditions;
  double smoothing_epsilon = kDefaultSmoothingEpsilon;
  bool valid = false;

  const ConditionResult* condition(std::size_t size) const;
  /// Deterministic: no timings or paths.
  nlohmann::json to_json() const;
};

struct SweepOptions {
  /// Append-only TranslationRecord log; also the resume source.
  std::optional<std::filesystem::path> run_log;
  bool resume = true;
};

/// Runs every configured size in order with identical settings apart from
/// the knowledge-base size. Requires size 0 in cfg.sizes.
SweepReport sweep(const Corpus& test, const Corpus& kb, const PipelineConfig& cfg,
                  Backends& backends, const SweepOptions& opts = {});

/// Per-sentence blocks of (size, BLEU, output). Throws for unknown ids or
/// sizes; an empty id list yields an empty string.
std::string case_report(const SweepReport& report, const std::vector<std::string>& test_ids,
                        const std::vector<std::size_t>& sizes, const Corpus* test = nullptr);

std::string table1_markdown(const SweepReport& report);
std::string table1_csv(const SweepReport& report);
/// One row per (test_id, size) plus a summary row per size.
std::string scores_jsonl(const SweepReport& report);

/// Writes report.json, table1.md, table1.csv, scores.jsonl and cases.md.
/// `invocation` (effective config as given) is echoed into report.json.
void write_sweep_artifacts(const SweepReport& report, const std::filesystem::path& out_dir,
                           const Corpus& test, const nlohmann::json& invocation = nullptr);

}  // namespace ragmt
