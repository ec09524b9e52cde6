#include "ragmt/config.hpp"

#include <algorithm>
#include <fstream>

#include "ragmt/error.hpp"
#include "ragmt/hashing.hpp"

namespace ragmt {

using json = nlohmann::json;

namespace {

const std::vector<std::string> kKnownKeys = {
    "retriever",    "analysis_backend", "generation_backend", "encoder",
    "template_version", "smoothing_epsilon", "sizes",         "seed",
    "bare_baseline", "max_concurrency", "max_retries",        "retry_backoff_ms",
    "report"};

std::string kind_of(const json& section, const char* what) {
  if (!section.is_object() || !section.contains("kind")) {
    throw InvalidArgument(std::string(what) + " needs a \"kind\"");
  }
  return section.at("kind").get<std::string>();
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

json PipelineConfig::to_json() const {
  return {{"retriever", retriever.to_json()},
          {"analysis_backend", analysis_backend},
          {"generation_backend", generation_backend},
          {"encoder", encoder},
          {"template_version", template_version},
          {"smoothing_epsilon", smoothing_epsilon},
          {"sizes", sizes},
          {"seed", seed},
          {"bare_baseline", bare_baseline},
          {"max_concurrency", max_concurrency},
          {"max_retries", max_retries},
          {"retry_backoff_ms", retry_backoff_ms},
          {"report", {{"case_ids", report.case_ids}, {"case_sizes", report.case_sizes}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j,
                                         const std::vector<std::string>& passthrough_keys) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    const bool known = std::find(kKnownKeys.begin(), kKnownKeys.end(), k) != kKnownKeys.end() ||
                       std::find(passthrough_keys.begin(), passthrough_keys.end(), k) !=
                           passthrough_keys.end();
    if (!known) throw InvalidArgument("unknown config key '" + k + "'");
  }
  PipelineConfig c;
  try {
    if (j.contains("retriever")) c.retriever = RetrieverConfig::from_json(j.at("retriever"));
    c.analysis_backend = j.value("analysis_backend", c.analysis_backend);
    c.generation_backend = j.value("generation_backend", c.generation_backend);
    c.encoder = j.value("encoder", c.encoder);
    c.template_version = j.value("template_version", c.template_version);
    c.smoothing_epsilon = j.value("smoothing_epsilon", c.smoothing_epsilon);
    c.sizes = j.value("sizes", c.sizes);
    c.seed = j.value("seed", c.seed);
    c.bare_baseline = j.value("bare_baseline", c.bare_baseline);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.retry_backoff_ms = j.value("retry_backoff_ms", c.retry_backoff_ms);
    if (auto r = j.find("report"); r != j.end()) {
      c.report.case_ids = r->value("case_ids", c.report.case_ids);
      c.report.case_sizes = r->value("case_sizes", c.report.case_sizes);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
  kind_of(c.analysis_backend, "analysis_backend");
  kind_of(c.generation_backend, "generation_backend");
  kind_of(c.encoder, "encoder");
  return c;
}

void PipelineConfig::validate(std::optional<std::size_t> kb_size) const {
  if (sizes.empty()) throw InvalidArgument("config: sizes must not be empty");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw InvalidArgument("config: sizes must be sorted ascending and unique");
    }
  }
  if (kb_size && sizes.back() > *kb_size) {
    throw InvalidArgument("config: size " + std::to_string(sizes.back()) +
                          " exceeds knowledge base size " + std::to_string(*kb_size));
  }
  if (retriever.k < 1) throw InvalidArgument("config: retriever.k must be >= 1");
  if (!(smoothing_epsilon > 0.0)) throw InvalidArgument("config: smoothing_epsilon must be > 0");
  if (max_concurrency < 1) throw InvalidArgument("config: max_concurrency must be >= 1");
  if (max_retries < 0) throw InvalidArgument("config: max_retries must be >= 0");
}

json PipelineConfig::condition_snapshot(std::size_t kb_size, const std::string& kb_fingerprint,
                                        const std::string& test_fingerprint) const {
  json j = to_json();
  j.erase("sizes");
  j.erase("report");
  j["kb_size"] = kb_size;
  j["kb_fingerprint"] = kb_fingerprint;
  j["test_fingerprint"] = test_fingerprint;
  return j;
}

std::string config_hash(const json& snapshot) { return short_hash(snapshot.dump()); }

json default_judge_script() {
  return {{"id", "scripted-stub"},
          {"a1", {{"default", "ANSWER: INNER"}}},
          {"a2", {{"default", "ANSWER: B"}}}};
}

Backends make_backends(const PipelineConfig& cfg, const BackendOptions& opts) {
  Backends b;
  b.retry.max_retries = cfg.max_retries;
  b.retry.initial_backoff = std::chrono::milliseconds(cfg.retry_backoff_ms);
  b.analysis_policy.max_parse_retries = cfg.max_retries;
  b.analysis_policy.transport = b.retry;

  const std::string judge_kind = kind_of(cfg.analysis_backend, "analysis_backend");
  if (judge_kind == "scripted-stub") {
    json script = default_judge_script();
    if (auto s = cfg.analysis_backend.find("script"); s != cfg.analysis_backend.end()) {
      script = *s;
    } else if (auto p = cfg.analysis_backend.find("script_path");
               p != cfg.analysis_backend.end()) {
      std::filesystem::path path = p->get<std::string>();
      if (path.is_relative()) path = opts.base_dir / path;
      script = read_json_file(path);
    }
    b.judge = std::make_shared<ScriptedJudge>(script);
  } else if (judge_kind == "remote-llm") {
    b.judge = std::make_shared<RemoteJudge>(
        EndpointConfig::from_json(cfg.analysis_backend, EndpointConfig{.model = "gpt-4o"}),
        cfg.analysis_backend.value("params", json{{"temperature", 0.0}}));
  } else {
    throw InvalidArgument("unknown analysis_backend kind '" + judge_kind + "'");
  }

  const std::string gen_kind = kind_of(cfg.generation_backend, "generation_backend");
  if (gen_kind == "copy-stub") {
    b.generator = std::make_shared<CopyStub>();
  } else if (gen_kind == "fixed-stub") {
    b.generator = std::make_shared<FixedStub>(cfg.generation_backend.value("text", std::string("你好")));
  } else if (gen_kind == "remote-llm") {
    b.generator = std::make_shared<RemoteGenerator>(
        EndpointConfig::from_json(cfg.generation_backend, EndpointConfig{.model = "gpt-4o"}),
        DecodingParams::from_json(cfg.generation_backend.value("params", json::object())));
  } else {
    throw InvalidArgument("unknown generation_backend kind '" + gen_kind + "'");
  }

  const std::string enc_kind = kind_of(cfg.encoder, "encoder");
  if (enc_kind == "mock") {
    b.encoder = std::make_shared<MockEncoder>(cfg.encoder.value("dim", std::size_t{64}),
                                              cfg.encoder.value("seed", std::uint64_t{7}));
  } else if (enc_kind == "remote") {
    b.encoder = std::make_shared<RemoteEncoder>(
        EndpointConfig::from_json(cfg.encoder, EndpointConfig{.model = "text-embedding-ada-002"}),
        cfg.encoder.value("dim", std::size_t{1536}));
  } else {
    throw InvalidArgument("unknown encoder kind '" + enc_kind + "'");
  }

  b.cache = opts.cache_path ? std::make_shared<EmbeddingCache>(*opts.cache_path)
                            : std::make_shared<EmbeddingCache>();
  b.prompt_template = opts.template_path
                          ? PromptTemplate::from_file(*opts.template_path, cfg.template_version)
                          : PromptTemplate::builtin(cfg.template_version);
  return b;
}

}  // namespace ragmt
