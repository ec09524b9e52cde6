#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/analysis.hpp"
#include "ragmt/bleu.hpp"
#include "ragmt/generation.hpp"
#include "ragmt/promptgen.hpp"
#include "ragmt/retrieval.hpp"

namespace ragmt {

enum class SessionStatus { Open, Archived };

struct HitSelection {
  RetrievalHit hit;
  std::string jp;
  std::string zh;
  bool selected = true;
  std::string justification;
};

struct PromptVersion {
  EnhancedPrompt prompt;
  std::string note;
  std::vector<std::size_t> selected_ranks;
};

struct PostEdit {
  std::string text;
  std::string note;
};

struct ScoreEntry {
  std::string target;  ///< "output" or "post_edit"
  std::string hypothesis;
  std::string reference;
  BleuScore bleu;
};

/// Materialized state of one workbench session.
struct Session {
  std::string id;
  std::string sl;
  std::optional<AnalysisResult> analysis;
  bool retrieved = false;
  std::vector<HitSelection> hits;
  std::vector<PromptVersion> prompt_versions;
  std::vector<TranslationRecord> outputs;
  std::vector<PostEdit> post_edits;
  std::vector<ScoreEntry> scores;
  SessionStatus status = SessionStatus::Open;
  std::uint64_t event_count = 0;

  nlohmann::json to_json() const;
};

/// One entry of a session's append-only log. The payload carries complete
/// results, so replay needs no backend.
///
/// Types: created {session_id, sl} | analyzed {analysis} |
/// retrieved {hits: [{hit, jp, zh}]} | selection {rank, selected, justification} |
/// composed {prompt, note, selected_ranks} | generated {record} |
/// post_edited {text, note} | scored {target, hypothesis, reference, bleu} |
/// archived {}
struct SessionEvent {
  std::uint64_t seq = 0;
  std::string type;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static SessionEvent from_json(const nlohmann::json& j);
};

/// Applies one event. Throws FormatError on unknown types or payloads that
/// do not fit the current state.
void apply(Session& session, const SessionEvent& event);
Session replay(std::span<const SessionEvent> events);

/// One JSONL file per session under `dir`.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  void append(const std::string& session_id, const SessionEvent& event);
  std::vector<SessionEvent> load(const std::string& session_id) const;
  std::vector<std::string> list() const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& session_id) const;
  std::filesystem::path dir_;
};

}  // namespace ragmt
