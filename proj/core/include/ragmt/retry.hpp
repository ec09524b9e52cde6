#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ragmt/error.hpp"

namespace ragmt {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{0};
  double backoff_factor = 2.0;
};

/// Calls `fn(attempt)` until it returns without a retriable TransportError.
/// Gives up after 1 + max_retries attempts with RetriesExhausted carrying
/// one log line per failed attempt.
template <class Fn>
auto call_with_retries(const RetryPolicy& policy, std::string_view what, Fn&& fn)
    -> decltype(fn(0)) {
  std::vector<std::string> log;
  auto delay = policy.initial_backoff;
  const int attempts = 1 + (policy.max_retries < 0 ? 0 : policy.max_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      return fn(attempt);
    } catch (const TransportError& e) {
      log.push_back("attempt " + std::to_string(attempt + 1) + ": " + e.what());
      if (!e.retriable()) break;
    }
    if (attempt + 1 < attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * policy.backoff_factor));
    }
  }
  std::string message =
      std::string(what) + " failed after " + std::to_string(log.size()) + " attempt(s)";
  throw RetriesExhausted(std::move(message), std::move(log));
}

}  // namespace ragmt
