// ragmt: command-line entry points for the translation pipeline.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli_support.hpp"
#include "ragmt/bleu.hpp"
#include "ragmt/corpus.hpp"
#include "ragmt/error.hpp"
#include "ragmt/harness.hpp"
#include "ragmt/http_service.hpp"
#include "ragmt/text.hpp"
#include "ragmt/workbench.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ragmt;

namespace {

constexpr int kOk = 0;
constexpr int kOperationalError = 1;
constexpr int kUsageError = 2;

struct Options {
  std::optional<fs::path> config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> backend;
  std::optional<std::string> encoder;
  bool bare_baseline = false;
  std::optional<fs::path> cache;

  std::optional<fs::path> kb;
  std::optional<fs::path> test;
  std::optional<fs::path> out;
  std::optional<std::size_t> size;
  std::optional<std::string> sizes;

  std::optional<fs::path> input;
  std::string query;
  std::string sl;
  std::optional<fs::path> hyp;
  std::optional<fs::path> ref;
  std::string eval_format = "text";
  std::optional<fs::path> run_log;
  bool no_resume = false;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<fs::path> session_dir;
  std::optional<fs::path> static_dir;
};

/// A failure that should be reported as a usage error.
struct UsageError : Error {
  using Error::Error;
};

cli::EffectiveConfig effective_config(const Options& o) {
  cli::EffectiveConfig cfg = cli::load_config(o.config, o.overrides);
  if (o.seed) cfg.raw["seed"] = *o.seed;
  if (o.k) cfg.raw["retriever"]["k"] = *o.k;
  if (o.bare_baseline) cfg.raw["bare_baseline"] = true;
  if (o.backend && cfg.pipeline.generation_backend.value("kind", "") != *o.backend) {
    cfg.raw["generation_backend"] = {{"kind", *o.backend}};
  }
  if (o.encoder && cfg.pipeline.encoder.value("kind", "") != *o.encoder) {
    cfg.raw["encoder"] = {{"kind", *o.encoder}};
    if (*o.encoder == "mock") cfg.raw["encoder"].update({{"dim", 64}, {"seed", 7}});
  }
  if (o.sizes) cfg.raw["sizes"] = cli::parse_sizes(*o.sizes);
  cfg.pipeline = PipelineConfig::from_json(cfg.raw, cli::kServiceKeys);
  return cfg;
}

Backends backends_for(const cli::EffectiveConfig& cfg, const Options& o) {
  BackendOptions bo;
  bo.cache_path = o.cache;
  bo.base_dir = cfg.base_dir;
  return make_backends(cfg.pipeline, bo);
}

Corpus require_corpus(const std::optional<fs::path>& path, const char* flag, CorpusRole role) {
  if (!path) throw UsageError(std::string(flag) + " is required");
  return load_pairs(*path, format_from_path(*path), role);
}

std::string hash_of(const PipelineConfig& cfg, const Corpus* kb, std::size_t size, const Corpus* test) {
  return config_hash(cfg.condition_snapshot(size, kb ? fingerprint(*kb) : "", test ? fingerprint(*test) : ""));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_ingest(const Options& o) {
  auto cfg = effective_config(o);
  const bool is_test = o.test.has_value();
  if (is_test == o.kb.has_value()) throw UsageError("ingest needs exactly one of --kb or --test");
  const fs::path src = is_test ? *o.test : *o.kb;
  Corpus loaded = load_pairs(src, format_from_path(src), is_test ? CorpusRole::TestSet : CorpusRole::KnowledgeBase);
  CleanResult cleaned = dedup_and_clean(loaded);
  json report = {{"source", src.string()},
                 {"role", to_string(cleaned.corpus.role)},
                 {"loaded", loaded.size()},
                 {"kept", cleaned.corpus.size()},
                 {"removed", cleaned.removed},
                 {"fingerprint", fingerprint(cleaned.corpus)},
                 {"config_hash", config_hash(cfg.pipeline.to_json())}};
  if (o.out) {
    fs::create_directories(*o.out);
    std::ofstream out(*o.out / "corpus.jsonl", std::ios::binary | std::ios::trunc);
    write_jsonl(out, cleaned.corpus);
    if (!out) throw Error("failed writing " + (*o.out / "corpus.jsonl").string());
    write_text(*o.out / "ingest_report.json", report.dump(2) + "\n");
  }
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_check(const Options& o) {
  Corpus kb = require_corpus(o.kb, "--kb", CorpusRole::KnowledgeBase);
  Corpus test = require_corpus(o.test, "--test", CorpusRole::TestSet);
  ContaminationReport r = check_disjoint(test, kb);
  json j = r.to_json();
  j["clean"] = r.empty();
  std::cout << j.dump(2) << "\n";
  return r.empty() ? kOk : kOperationalError;
}

int cmd_index(const Options& o) {
  auto cfg = effective_config(o);
  if (!o.out) throw UsageError("--out is required");
  Corpus kb = require_corpus(o.kb, "--kb", CorpusRole::KnowledgeBase);
  const std::size_t size = o.size.value_or(kb.size());
  Corpus sub = subset(kb, size, cfg.pipeline.seed);
  Backends b = backends_for(cfg, o);
  VectorIndex index = build_index(sub, *b.encoder, *b.cache, b.retry);
  if (o.out->has_parent_path()) fs::create_directories(o.out->parent_path());
  index.save(*o.out);
  json meta = {{"snapshot", o.out->filename().string()},
               {"size", index.size()},
               {"dim", index.dim()},
               {"encoder_id", index.encoder_id()},
               {"kb_fingerprint", fingerprint(sub)},
               {"config_hash", hash_of(cfg.pipeline, &sub, size, nullptr)}};
  write_text(fs::path(o.out->string() + ".json"), meta.dump(2) + "\n");
  std::cout << meta.dump(2) << "\n";
  return kOk;
}

int cmd_analyze(const Options& o) {
  auto cfg = effective_config(o);
  std::vector<std::pair<std::string, std::string>> items;
  if (o.test) {
    for (auto& p : load_pairs(*o.test, format_from_path(*o.test), CorpusRole::TestSet).pairs) {
      items.emplace_back(p.id, p.source_ja);
    }
  } else if (o.input) {
    std::size_t n = 0;
    for (auto& line : cli::read_lines(*o.input)) {
      ++n;
      std::string s = text::normalize(line);
      if (!s.empty()) items.emplace_back("line-" + std::to_string(n), s);
    }
  } else {
    throw UsageError("analyze needs --test or --input");
  }
  Backends b = backends_for(cfg, o);
  const std::string hash = config_hash(cfg.pipeline.to_json());
  std::ostringstream out;
  for (const auto& [id, sentence] : items) {
    AnalysisResult r = analyze(sentence, *b.judge, b.analysis_policy);
    out << json{{"id", id}, {"sentence", sentence}, {"analysis", to_json(r)}, {"config_hash", hash}}.dump()
        << "\n";
  }
  if (o.out) write_text(*o.out, out.str());
  std::cout << out.str();
  return kOk;
}

int cmd_retrieve(const Options& o) {
  auto cfg = effective_config(o);
  if (o.query.empty()) throw UsageError("--query is required");
  Corpus kb = require_corpus(o.kb, "--kb", CorpusRole::KnowledgeBase);
  const std::size_t size = o.size.value_or(kb.size());
  if (size == 0) throw UsageError("--size must be positive for retrieval");
  Corpus sub = subset(kb, size, cfg.pipeline.seed);
  Backends b = backends_for(cfg, o);
  VectorIndex index = build_index(sub, *b.encoder, *b.cache, b.retry);
  Embedding q = embed(o.query, *b.encoder, *b.cache, b.retry);
  json hits = json::array();
  for (const auto& h : search(index, q, cfg.pipeline.retriever)) {
    json entry = to_json(h);
    const SentencePair* p = sub.find(h.pair_id);
    entry["jp"] = p->source_ja;
    entry["zh"] = p->target_zh;
    hits.push_back(std::move(entry));
  }
  json j = {{"query", text::normalize(o.query)},
            {"hits", hits},
            {"config_hash", hash_of(cfg.pipeline, &sub, size, nullptr)}};
  if (o.out) write_text(*o.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_translate(const Options& o) {
  auto cfg = effective_config(o);
  std::string sl = text::normalize(o.sl);
  if (sl.empty()) throw UsageError("--sl is required");
  std::optional<Corpus> kb;
  if (o.kb) kb = load_pairs(*o.kb, format_from_path(*o.kb), CorpusRole::KnowledgeBase);
  const std::size_t size = kb ? o.size.value_or(kb->size()) : 0;
  if (!kb && o.size.value_or(0) > 0) throw UsageError("--size needs --kb");

  Backends b = backends_for(cfg, o);
  std::optional<Corpus> sub;
  std::optional<VectorIndex> index;
  ConditionKb ckb;
  if (kb && size > 0) {
    sub = subset(*kb, size, cfg.pipeline.seed);
    index = build_index(*sub, *b.encoder, *b.cache, b.retry);
    ckb = ConditionKb{&*sub, &*index};
  }
  SentenceRun run = run_sentence("cli", sl, ckb, cfg.pipeline, b);
  json hits = json::array();
  for (const auto& h : run.hits) hits.push_back(to_json(h));
  json j = {{"sl", sl},
            {"size", size},
            {"analysis", run.analysis ? to_json(*run.analysis) : json(nullptr)},
            {"hits", hits},
            {"prompt", run.record.prompt.rendered},
            {"output_zh", run.record.output_zh},
            {"config_hash", hash_of(cfg.pipeline, sub ? &*sub : nullptr, size, nullptr)}};
  if (o.out) write_text(*o.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o) {
  auto cfg = effective_config(o);
  if (!o.hyp || !o.ref) throw UsageError("evaluate needs --hyp and --ref");
  const double eps = cfg.pipeline.smoothing_epsilon;
  std::vector<std::string> ids, hyps, refs;
  if (o.eval_format == "text") {
    hyps = cli::read_lines(*o.hyp);
    refs = cli::read_lines(*o.ref);
    if (hyps.size() != refs.size()) {
      throw Error("line count mismatch: " + std::to_string(hyps.size()) + " hypotheses, " +
                  std::to_string(refs.size()) + " references");
    }
    for (std::size_t i = 0; i < hyps.size(); ++i) ids.push_back(std::to_string(i + 1));
  } else if (o.eval_format == "jsonl") {
    Corpus ref = load_pairs(*o.ref, CorpusFormat::Jsonl, CorpusRole::TestSet);
    std::ifstream in(*o.hyp, std::ios::binary);
    if (!in) throw Error("cannot open " + o.hyp->string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw FormatError(o.hyp->string() + ": line " + std::to_string(n) + ": not a JSON object");
      }
      const std::string id = j.value("test_id", j.value("id", std::string{}));
      const std::string out = j.value("output_zh", j.value("hyp", std::string{}));
      const SentencePair* p = ref.find(id);
      if (!p) throw FormatError(o.hyp->string() + ": line " + std::to_string(n) + ": unknown id '" + id + "'");
      ids.push_back(id);
      hyps.push_back(out);
      refs.push_back(p->target_zh);
    }
  } else {
    throw UsageError("--format must be text or jsonl");
  }
  if (ids.empty()) throw Error("nothing to evaluate");

  std::vector<double> scores;
  json rows = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    BleuScore s = sentence_bleu(tokenize_chars(hyps[i]), tokenize_chars(refs[i]), eps);
    scores.push_back(s.score);
    std::cout << ids[i] << "\t" << format_fixed(s.score, 2) << "\n";
    rows.push_back({{"id", ids[i]}, {"bleu", s.to_json()}});
  }
  const double mean = macro_average(scores);
  std::cout << "mean\t" << format_fixed(mean, 2) << "\n";
  if (o.out) {
    json j = {{"sentences", rows}, {"mean_bleu", mean}, {"config_hash", config_hash(cfg.pipeline.to_json())}};
    write_text(*o.out, j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  auto cfg = effective_config(o);
  if (!o.out) throw UsageError("--out is required");
  Corpus kb = require_corpus(o.kb, "--kb", CorpusRole::KnowledgeBase);
  Corpus test = require_corpus(o.test, "--test", CorpusRole::TestSet);
  cfg.pipeline.validate(kb.size());
  Backends b = backends_for(cfg, o);
  SweepOptions so;
  so.run_log = o.run_log.value_or(*o.out / "runs.jsonl");
  so.resume = !o.no_resume;
  SweepReport report;
  try {
    report = sweep(test, kb, cfg.pipeline, b, so);
  } catch (const ContaminationError& e) {
    std::cerr << "contamination check failed; no generation was run\n"
              << e.report().to_json().dump(2) << "\n";
    return kOperationalError;
  }
  write_sweep_artifacts(report, *o.out, test, cfg.raw);
  std::cout << table1_markdown(report);
  return report.valid ? kOk : kOperationalError;
}

HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Options& o) {
  auto cfg = effective_config(o);
  if (o.host) cfg.service.host = *o.host;
  if (o.port) cfg.service.port = *o.port;
  if (o.session_dir) cfg.service.session_dir = *o.session_dir;
  if (o.static_dir) cfg.service.static_dir = *o.static_dir;

  WorkbenchContext ctx;
  ctx.config = cfg.pipeline;
  ctx.backends = backends_for(cfg, o);
  if (o.kb) {
    Corpus kb = load_pairs(*o.kb, format_from_path(*o.kb), CorpusRole::KnowledgeBase);
    ctx.kb = subset(kb, o.size.value_or(kb.size()), cfg.pipeline.seed);
    if (ctx.kb->empty()) ctx.kb.reset();
  }
  Workbench wb(std::move(ctx), cfg.service.session_dir);
  const std::size_t restored = wb.restore();
  HttpService service(wb, cfg.service.static_dir);
  const int port = service.bind(cfg.service.host, cfg.service.port);
  std::cout << json{{"host", cfg.service.host},
                    {"port", port},
                    {"sessions_restored", restored},
                    {"kb", wb.kb_status()},
                    {"config_hash", config_hash(cfg.pipeline.to_json())}}
                   .dump()
            << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented Japanese-to-Chinese translation pipeline"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "Config override key=value (repeatable)");
  app.add_option("--seed", o.seed, "Knowledge-base ordering seed");
  app.add_option("--k", o.k, "Retrieved examples per sentence");
  app.add_option("--backend", o.backend, "Generation backend kind")
      ->check(CLI::IsMember({"copy-stub", "fixed-stub", "remote-llm"}));
  app.add_option("--encoder", o.encoder, "Encoder kind")->check(CLI::IsMember({"mock", "remote"}));
  app.add_flag("--bare-baseline", o.bare_baseline, "Drop A1/A2 from the size-0 prompt");
  app.add_option("--cache", o.cache, "Persistent embedding cache (JSONL)");

  auto kb_opt = [&](CLI::App* c) { c->add_option("--kb", o.kb, "Knowledge-base corpus")->check(CLI::ExistingFile); };
  auto test_opt = [&](CLI::App* c) { c->add_option("--test", o.test, "Test corpus")->check(CLI::ExistingFile); };

  auto* ingest = app.add_subcommand("ingest", "Load, clean and report a corpus");
  kb_opt(ingest);
  test_opt(ingest);
  ingest->add_option("--out", o.out, "Output directory");

  auto* check = app.add_subcommand("check", "Contamination gate between test set and knowledge base");
  kb_opt(check);
  test_opt(check);

  auto* index = app.add_subcommand("index", "Build and snapshot a vector index");
  kb_opt(index);
  index->add_option("--size", o.size, "Knowledge-base prefix size");
  index->add_option("--out", o.out, "Snapshot path");

  auto* analyze_cmd = app.add_subcommand("analyze", "A1/A2 analysis for a file of sentences");
  test_opt(analyze_cmd);
  analyze_cmd->add_option("--input", o.input, "Plain-text sentences, one per line")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", o.out, "Output JSONL");

  auto* retrieve = app.add_subcommand("retrieve", "Top-k examples for a query");
  kb_opt(retrieve);
  retrieve->add_option("--query", o.query, "Japanese query sentence");
  retrieve->add_option("--size", o.size, "Knowledge-base prefix size");
  retrieve->add_option("--out", o.out, "Output JSON");

  auto* translate_cmd = app.add_subcommand("translate", "Translate one sentence end to end");
  translate_cmd->add_option("--sl", o.sl, "Japanese source sentence");
  kb_opt(translate_cmd);
  translate_cmd->add_option("--size", o.size, "Knowledge-base prefix size");
  translate_cmd->add_option("--out", o.out, "Output JSON");

  auto* evaluate = app.add_subcommand("evaluate", "Sentence BLEU for hypothesis/reference files");
  evaluate->add_option("--hyp", o.hyp, "Hypotheses")->check(CLI::ExistingFile);
  evaluate->add_option("--ref", o.ref, "References")->check(CLI::ExistingFile);
  evaluate->add_option("--format", o.eval_format, "text (one per line) or jsonl")
      ->check(CLI::IsMember({"text", "jsonl"}));
  evaluate->add_option("--out", o.out, "Output JSON");

  auto* sweep_cmd = app.add_subcommand("sweep", "Full knowledge-base size sweep");
  kb_opt(sweep_cmd);
  test_opt(sweep_cmd);
  sweep_cmd->add_option("--sizes", o.sizes, "Comma-separated sizes, starting with 0");
  sweep_cmd->add_option("--out", o.out, "Output directory");
  sweep_cmd->add_option("--run-log", o.run_log, "Run log (default <out>/runs.jsonl)");
  sweep_cmd->add_flag("--no-resume", o.no_resume, "Ignore records in the run log");

  auto* serve = app.add_subcommand("serve", "Start the workbench HTTP service");
  kb_opt(serve);
  serve->add_option("--size", o.size, "Knowledge-base prefix size");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, "Bind port (0 picks a free one)");
  serve->add_option("--sessions", o.session_dir, "Session log directory");
  serve->add_option("--static", o.static_dir, "Static asset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsageError;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*check) return cmd_check(o);
    if (*index) return cmd_index(o);
    if (*analyze_cmd) return cmd_analyze(o);
    if (*retrieve) return cmd_retrieve(o);
    if (*translate_cmd) return cmd_translate(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*serve) return cmd_serve(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  }
  return kUsageError;
}
