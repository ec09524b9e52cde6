#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragmt {

/// An OpenAI-compatible HTTP endpoint. The credential is read from the
/// environment variable named by `api_key_env` at request time.
struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;

  nlohmann::json to_json() const;
  static EndpointConfig from_json(const nlohmann::json& j);
  static EndpointConfig from_json(const nlohmann::json& j, EndpointConfig defaults);
};

/// Thin client for /chat/completions and /embeddings. Safe for concurrent
/// use; each request opens its own connection. Failures raise TransportError
/// (retriable for network errors, 429 and 5xx).
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig config);

  /// Sends `prompt` as a single user message; returns the first choice text.
  std::string complete(const std::string& prompt, const nlohmann::json& params) const;
  std::vector<double> embed(const std::string& text) const;

  const EndpointConfig& config() const noexcept { return config_; }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  EndpointConfig config_;
  std::string scheme_host_;
  std::string path_prefix_;
};

}  // namespace ragmt
