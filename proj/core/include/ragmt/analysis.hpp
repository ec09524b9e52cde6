#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/chat_client.hpp"
#include "ragmt/retry.hpp"
#include "ragmt/risk.hpp"

namespace ragmt {

enum class AnalysisTask { NmccType, RiskPrediction };

struct JudgmentRequest {
  AnalysisTask task;
  std::string_view sentence;
  std::string_view prompt;
  /// 0 for the first parse attempt, incremented on each parse retry.
  int attempt = 0;
};

/// Answers the A1/A2 analysis prompts. Implementations must be safe for
/// concurrent calls.
class JudgmentBackend {
 public:
  virtual ~JudgmentBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string judge(const JudgmentRequest& request) = 0;
};

/// Deterministic backend driven by a JSON script:
///
///   {"id": "...",
///    "a1": {"default": "ANSWER: INNER",
///           "rules": [{"contains": "匂い", "responses": ["ANSWER: OUTER"]}]},
///    "a2": {"default": ["garbled", "ANSWER: B"], "rules": []}}
///
/// The first rule whose `contains` (or `equals`) matches the sentence wins.
/// A response list is indexed by the parse attempt, repeating its last entry.
class ScriptedJudge final : public JudgmentBackend {
 public:
  explicit ScriptedJudge(const nlohmann::json& script);
  /// Answers every A1 request with `a1` and every A2 request with `a2`.
  ScriptedJudge(std::string a1, std::string a2);

  std::string id() const override { return id_; }
  std::string judge(const JudgmentRequest& request) override;

 private:
  struct Rule {
    std::string contains;
    std::string equals;
    std::vector<std::string> responses;
  };
  struct TaskScript {
    std::vector<std::string> defaults;
    std::vector<Rule> rules;
  };
  static TaskScript parse_task(const nlohmann::json& j);

  std::string id_;
  TaskScript a1_;
  TaskScript a2_;
};

/// Sends the analysis prompts to a chat-completion endpoint.
class RemoteJudge final : public JudgmentBackend {
 public:
  RemoteJudge(EndpointConfig endpoint, nlohmann::json params);
  std::string id() const override;
  std::string judge(const JudgmentRequest& request) override;

 private:
  ChatClient client_;
  nlohmann::json params_;
};

struct AnalysisPolicy {
  /// Re-asks with the identical prompt when the answer cannot be parsed.
  int max_parse_retries = 3;
  RetryPolicy transport;
};

struct NmccJudgment {
  NmccType type = NmccType::Unknown;
  std::string raw;
  bool parse_failed = false;
  int attempts = 0;
};

struct RiskJudgment {
  RiskSet risks;
  std::string raw;
  bool parse_failed = false;
  int attempts = 0;
};

struct AnalysisResult {
  NmccType a1 = NmccType::Unknown;
  RiskSet a2;
  std::string raw_a1_response;
  std::string raw_a2_response;
  std::string backend_id;
  bool a1_parse_failed = false;
  bool a2_parse_failed = false;

  bool operator==(const AnalysisResult&) const = default;
};

nlohmann::json to_json(const AnalysisResult& r);
AnalysisResult analysis_from_json(const nlohmann::json& j);

std::string render_a1_prompt(std::string_view sentence);
std::string render_a2_prompt(std::string_view sentence);

/// Total. Looks at the last "ANSWER:" line when present, else the whole
/// text. Exactly one of inner/outer (or 内の関係/外の関係) yields a label;
/// none or both yield Unknown.
NmccType parse_a1_response(std::string_view raw);

struct RiskParse {
  RiskSet risks;
  /// False when nothing usable was found: no category and no explicit "none".
  bool recognized = false;
};

/// Total. Collects standalone letters A-D and category names.
RiskParse parse_a2_detailed(std::string_view raw);
RiskSet parse_a2_response(std::string_view raw);

NmccJudgment classify_nmcc(std::string_view sentence, JudgmentBackend& backend,
                           const AnalysisPolicy& policy = {});
RiskJudgment predict_risks(std::string_view sentence, JudgmentBackend& backend,
                           const AnalysisPolicy& policy = {});
/// A1 then A2 for one sentence.
AnalysisResult analyze(std::string_view sentence, JudgmentBackend& backend,
                       const AnalysisPolicy& policy = {});

}  // namespace ragmt
