#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/config.hpp"
#include "ragmt/corpus.hpp"
#include "ragmt/error.hpp"
#include "ragmt/retrieval.hpp"
#include "ragmt/session.hpp"

namespace ragmt {

/// Rejected workbench operation. `status` follows HTTP conventions:
/// 400 bad input, 404 unknown session, 409 state conflict.
class WorkbenchError : public Error {
 public:
  WorkbenchError(int status, std::string code, const std::string& message,
                 std::optional<std::string> missing_prerequisite = std::nullopt)
      : Error(message),
        status_(status),
        code_(std::move(code)),
        missing_(std::move(missing_prerequisite)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const std::optional<std::string>& missing_prerequisite() const noexcept { return missing_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  std::optional<std::string> missing_;
};

struct WorkbenchContext {
  PipelineConfig config;
  Backends backends;
  /// Knowledge base visible to retrieval; no retrieval step without it.
  std::optional<Corpus> kb;
  std::optional<VectorIndex> index;
};

struct SelectionChange {
  std::size_t rank = 0;
  bool selected = true;
  std::string justification;
};

/// Human-in-the-loop translation sessions. Every accepted operation is one
/// event appended to the session log before the in-memory state changes, so
/// a restart replays to the same state. Operations on different sessions
/// run concurrently; operations on one session are serialized.
class Workbench {
 public:
  Workbench(WorkbenchContext ctx, std::filesystem::path session_dir);

  /// Reloads every session found in the session directory.
  std::size_t restore();

  Session create_session(const std::string& sl);
  Session get(const std::string& id) const;
  std::vector<std::string> list() const;

  Session analyze(const std::string& id);
  Session retrieve(const std::string& id, std::optional<std::size_t> k = std::nullopt);
  Session select(const std::string& id, const SelectionChange& change);
  Session compose(const std::string& id, const std::vector<SelectionChange>& changes = {},
                  const std::string& note = {});
  Session generate(const std::string& id);
  Session post_edit(const std::string& id, const std::string& text, const std::string& note = {});
  /// Scores the latest post-edit when there is one, else the latest output,
  /// unless `target` ("output" or "post_edit") says otherwise.
  Session score(const std::string& id, const std::string& reference,
                std::optional<std::string> target = std::nullopt);
  Session archive(const std::string& id);

  nlohmann::json export_worksheet(const std::string& id) const;
  std::string export_worksheet_markdown(const std::string& id) const;
  /// Archived sessions as knowledge-base pairs; reloads through load_pairs
  /// unchanged. An empty id list gives an empty corpus.
  Corpus export_kb_candidates(const std::vector<std::string>& ids) const;
  nlohmann::json kb_status() const;

  const std::filesystem::path& session_dir() const { return store_.dir(); }

 private:
  struct Entry {
    mutable std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  Session commit(Entry& e, std::string type, nlohmann::json payload);
  static void require_open(const Session& s);

  WorkbenchContext ctx_;
  SessionStore store_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace ragmt
