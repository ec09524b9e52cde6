#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ragmt/chat_client.hpp"
#include "ragmt/promptgen.hpp"
#include "ragmt/retry.hpp"

namespace ragmt {

/// Decoding settings. Defaults are the most deterministic choice and are
/// recorded with every translation.
struct DecodingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;
  std::optional<int> seed = 0;

  nlohmann::json to_json() const;
  static DecodingParams from_json(const nlohmann::json& j);
};

struct GenerationDescriptor {
  std::string kind;
  std::string model_id;
  DecodingParams params;

  nlohmann::json to_json() const;
  static GenerationDescriptor from_json(const nlohmann::json& j);
};

/// Produces target-language text for a rendered prompt. Implementations must
/// be safe for concurrent calls.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual GenerationDescriptor descriptor() const = 0;
  virtual std::string generate(const std::string& prompt) = 0;
};

/// Returns the (ZH) side of the first "(JP)... → (ZH)..." line in the
/// prompt, or "无参考" when there is none.
class CopyStub final : public GenerationBackend {
 public:
  static constexpr std::string_view kNoReference = "无参考";

  GenerationDescriptor descriptor() const override;
  std::string generate(const std::string& prompt) override;
};

class FixedStub final : public GenerationBackend {
 public:
  explicit FixedStub(std::string text) : text_(std::move(text)) {}
  GenerationDescriptor descriptor() const override;
  std::string generate(const std::string&) override { return text_; }

 private:
  std::string text_;
};

class RemoteGenerator final : public GenerationBackend {
 public:
  RemoteGenerator(EndpointConfig endpoint, DecodingParams params);
  GenerationDescriptor descriptor() const override;
  std::string generate(const std::string& prompt) override;

 private:
  ChatClient client_;
  DecodingParams params_;
};

struct TranslationRecord {
  std::string test_id;
  EnhancedPrompt prompt;
  std::string output_zh;
  std::string raw_response;
  GenerationDescriptor backend;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;
};

nlohmann::json to_json(const TranslationRecord& r);
TranslationRecord record_from_json(const nlohmann::json& j);

/// Append-only JSONL log. Each line is a TranslationRecord plus caller tags
/// (condition size, config hash). Appends are serialized.
class RunLog {
 public:
  explicit RunLog(std::filesystem::path path);
  void append(const TranslationRecord& record, const nlohmann::json& tags = nlohmann::json::object());
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Sends the prompt and returns the trimmed output. Transport failures and
/// empty outputs are retried per `retry`; the record is appended to `log`
/// when one is given.
TranslationRecord translate(const EnhancedPrompt& prompt, GenerationBackend& backend,
                            std::string test_id = {}, const RetryPolicy& retry = {},
                            RunLog* log = nullptr,
                            const nlohmann::json& log_tags = nlohmann::json::object());

}  // namespace ragmt
