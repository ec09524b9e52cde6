#include "ragmt/generation.hpp"

#include <fstream>

#include "ragmt/error.hpp"
#include "ragmt/text.hpp"

namespace ragmt {

using json = nlohmann::json;

json DecodingParams::to_json() const {
  json j = {{"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

DecodingParams DecodingParams::from_json(const json& j) {
  DecodingParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  if (auto s = j.find("seed"); s != j.end()) {
    p.seed = s->is_null() ? std::nullopt : std::optional<int>(s->get<int>());
  }
  return p;
}

json GenerationDescriptor::to_json() const {
  return {{"kind", kind}, {"model_id", model_id}, {"params", params.to_json()}};
}

GenerationDescriptor GenerationDescriptor::from_json(const json& j) {
  return GenerationDescriptor{j.at("kind").get<std::string>(), j.value("model_id", std::string{}),
                              DecodingParams::from_json(j.value("params", json::object()))};
}

GenerationDescriptor CopyStub::descriptor() const { return {"copy-stub", "copy-stub", {}}; }

std::string CopyStub::generate(const std::string& prompt) {
  static constexpr std::string_view kArrow = " → (ZH)";
  std::size_t start = 0;
  while (start < prompt.size()) {
    auto end = prompt.find('\n', start);
    if (end == std::string::npos) end = prompt.size();
    const std::string_view line(prompt.data() + start, end - start);
    if (line.rfind("(JP)", 0) == 0) {
      if (const auto arrow = line.find(kArrow); arrow != std::string_view::npos) {
        return std::string(line.substr(arrow + kArrow.size()));
      }
    }
    start = end + 1;
  }
  return std::string(kNoReference);
}

GenerationDescriptor FixedStub::descriptor() const { return {"fixed-stub", "fixed-stub", {}}; }

RemoteGenerator::RemoteGenerator(EndpointConfig endpoint, DecodingParams params)
    : client_(std::move(endpoint)), params_(std::move(params)) {}

GenerationDescriptor RemoteGenerator::descriptor() const {
  return {"remote-llm", client_.config().model, params_};
}

std::string RemoteGenerator::generate(const std::string& prompt) {
  json params = params_.to_json();
  if (params["seed"].is_null()) params.erase("seed");
  return client_.complete(prompt, params);
}

json to_json(const TranslationRecord& r) {
  return {{"test_id", r.test_id},
          {"prompt", to_json(r.prompt)},
          {"output_zh", r.output_zh},
          {"raw_response", r.raw_response},
          {"backend", r.backend.to_json()},
          {"latency_ms", r.latency.count()},
          {"attempt_count", r.attempt_count}};
}

TranslationRecord record_from_json(const json& j) {
  TranslationRecord r;
  r.test_id = j.at("test_id").get<std::string>();
  r.prompt = prompt_from_json(j.at("prompt"));
  r.output_zh = j.at("output_zh").get<std::string>();
  r.raw_response = j.value("raw_response", r.output_zh);
  r.backend = GenerationDescriptor::from_json(j.at("backend"));
  r.latency = std::chrono::milliseconds(j.value("latency_ms", 0LL));
  r.attempt_count = j.value("attempt_count", 1);
  return r;
}

RunLog::RunLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void RunLog::append(const TranslationRecord& record, const json& tags) {
  json line = to_json(record);
  for (const auto& [k, v] : tags.items()) line[k] = v;
  const std::string serialized = line.dump();
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to run log " + path_.string());
  out << serialized << '\n';
}

TranslationRecord translate(const EnhancedPrompt& prompt, GenerationBackend& backend,
                            std::string test_id, const RetryPolicy& retry, RunLog* log,
                            const json& log_tags) {
  if (prompt.rendered.empty()) throw InvalidArgument("translate: prompt not rendered");
  TranslationRecord rec;
  rec.test_id = std::move(test_id);
  rec.prompt = prompt;
  rec.backend = backend.descriptor();

  const auto started = std::chrono::steady_clock::now();
  rec.raw_response = call_with_retries(retry, "translation", [&](int attempt) {
    rec.attempt_count = attempt + 1;
    std::string raw = backend.generate(prompt.rendered);
    if (text::trim(raw).empty()) throw TransportError("backend returned an empty translation");
    return raw;
  });
  rec.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  rec.output_zh = text::trim(rec.raw_response);
  if (log != nullptr) log->append(rec, log_tags);
  return rec;
}

}  // namespace ragmt
