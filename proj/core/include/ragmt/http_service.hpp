#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ragmt/workbench.hpp"

namespace ragmt {

/// JSON-over-HTTP front end for a Workbench.
///
///   POST /sessions                      {"sl": "..."}
///   GET  /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/analyze
///   POST /sessions/{id}/retrieve        {"k": 5}?
///   POST /sessions/{id}/select          {"rank", "selected", "justification"}
///   POST /sessions/{id}/compose         {"selections": [...], "note"}?
///   POST /sessions/{id}/generate
///   POST /sessions/{id}/postedit        {"text", "note"?}
///   POST /sessions/{id}/score           {"reference", "target"?}
///   POST /sessions/{id}/archive
///   GET  /sessions/{id}/export          ?format=json|md
///   GET  /kb/status
///   POST /kb/candidates                 {"session_ids": [...]}? -> JSONL
///
/// Errors are {"code", "message", "missing_prerequisite"?} with status
/// 400, 404 or 409.
class HttpService {
 public:
  HttpService(Workbench& workbench, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and returns the port; `port` 0 picks a free one.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ragmt
