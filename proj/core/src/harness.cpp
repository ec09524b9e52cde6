#include "ragmt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "ragmt/promptgen.hpp"
#include "ragmt/text.hpp"

namespace ragmt {

using json = nlohmann::json;

namespace {

const Corpus& empty_corpus() {
  static const Corpus kEmpty;
  return kEmpty;
}

json hits_to_json(const std::vector<RetrievalHit>& hits) {
  json out = json::array();
  for (const auto& h : hits) out.push_back(to_json(h));
  return out;
}

std::vector<RetrievalHit> hits_from_json(const json& j) {
  std::vector<RetrievalHit> out;
  for (const auto& h : j) out.push_back(hit_from_json(h));
  return out;
}

}  // namespace

ContaminationError::ContaminationError(ContaminationReport report)
    : Error("test set overlaps the knowledge base (" +
            std::to_string(report.exact_matches.size()) + " exact, " +
            std::to_string(report.near_matches.size()) + " near matches)"),
      report_(std::move(report)) {}

AnalysisResult AnalysisMemo::get(std::string_view sentence, JudgmentBackend& backend,
                                 const AnalysisPolicy& policy) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = results_.find(sentence); it != results_.end()) return it->second;
  }
  AnalysisResult r = analyze(sentence, backend, policy);
  std::lock_guard lock(mutex_);
  return results_.emplace(std::string(sentence), std::move(r)).first->second;
}

void AnalysisMemo::put(std::string sentence, AnalysisResult result) {
  std::lock_guard lock(mutex_);
  results_.emplace(std::move(sentence), std::move(result));
}

SentenceRun run_sentence(std::string_view test_id, std::string_view sl, const ConditionKb& kb,
                         const PipelineConfig& cfg, Backends& b, AnalysisMemo* memo) {
  if (text::trim(sl).empty()) throw InvalidArgument("run_sentence: empty source sentence");
  SentenceRun run;
  const bool bare = cfg.bare_baseline && kb.index == nullptr;

  if (!bare) {
    try {
      run.analysis = memo != nullptr ? memo->get(sl, *b.judge, b.analysis_policy)
                                     : analyze(sl, *b.judge, b.analysis_policy);
    } catch (const std::exception& e) {
      throw StageError("analysis", e.what());
    }
  }

  if (kb.index != nullptr) {
    try {
      const Embedding query = embed(sl, *b.encoder, *b.cache, b.retry);
      run.hits = search(*kb.index, query, cfg.retriever);
    } catch (const std::exception& e) {
      throw StageError("retrieval", e.what());
    }
  }

  EnhancedPrompt prompt;
  try {
    if (bare) {
      prompt = render_bare_prompt(sl, b.prompt_template);
    } else {
      const Corpus& corpus = kb.corpus != nullptr ? *kb.corpus : empty_corpus();
      prompt = render_prompt(sl, run.analysis->a1, run.analysis->a2, run.hits, corpus,
                             b.prompt_template);
    }
  } catch (const std::exception& e) {
    throw StageError("prompt", e.what());
  }

  try {
    run.record = translate(prompt, *b.generator, std::string(test_id), b.retry);
  } catch (const std::exception& e) {
    throw StageError("generation", e.what());
  }
  return run;
}

ResumeStore ResumeStore::load(const std::filesystem::path& run_log) {
  ResumeStore store;
  std::ifstream in(run_log, std::ios::binary);
  if (!in) return store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!j.contains("size") || !j.contains("config_hash")) continue;
      Entry e;
      e.record = record_from_json(j);
      if (auto a = j.find("analysis"); a != j.end() && !a->is_null()) {
        e.analysis = analysis_from_json(*a);
      }
      if (auto h = j.find("hits"); h != j.end()) e.hits = hits_from_json(*h);
      Key key{e.record.test_id, j.at("size").get<std::size_t>(),
              j.at("config_hash").get<std::string>()};
      store.entries_.insert_or_assign(std::move(key), std::move(e));
    } catch (const json::exception&) {
      continue;  // torn or foreign line
    } catch (const Error&) {
      continue;
    }
  }
  return store;
}

const ResumeStore::Entry* ResumeStore::find(const std::string& test_id, std::size_t size,
                                            const std::string& hash) const {
  auto it = entries_.find(Key{test_id, size, hash});
  return it == entries_.end() ? nullptr : &it->second;
}

ConditionResult run_condition(const Corpus& test, const Corpus& kb, std::size_t size,
                              const PipelineConfig& cfg, Backends& b,
                              const ConditionOptions& opts) {
  if (test.empty()) throw InvalidArgument("run_condition: test set is empty");
  if (std::find(cfg.sizes.begin(), cfg.sizes.end(), size) == cfg.sizes.end()) {
    throw InvalidArgument("run_condition: size " + std::to_string(size) +
                          " is not one of the configured sizes");
  }
  if (auto report = check_disjoint(test, kb); !report.empty()) {
    throw ContaminationError(std::move(report));
  }

  ConditionResult result;
  result.size = size;
  result.config_snapshot = cfg.condition_snapshot(size, fingerprint(kb), fingerprint(test));
  result.config_hash = config_hash(result.config_snapshot);

  const Corpus sub = subset(kb, size, cfg.seed);
  std::optional<VectorIndex> index;
  if (size > 0) {
    try {
      index = build_index(sub, *b.encoder, *b.cache, b.retry);
    } catch (const std::exception& e) {
      throw StageError("index", e.what());
    }
  }
  const ConditionKb ckb{&sub, index ? &*index : nullptr};

  result.outcomes.resize(test.size());
  auto work = [&](std::size_t i) {
    const SentencePair& pair = test.pairs[i];
    SentenceOutcome& o = result.outcomes[i];
    o.test_id = pair.id;
    const ResumeStore::Entry* prior =
        opts.resume != nullptr ? opts.resume->find(pair.id, size, result.config_hash) : nullptr;
    if (prior != nullptr) {
      o.record = prior->record;
      o.analysis = prior->analysis;
      o.hits = prior->hits;
      o.reused = true;
      if (o.analysis && opts.memo != nullptr) opts.memo->put(pair.source_ja, *o.analysis);
    } else {
      try {
        SentenceRun run = run_sentence(pair.id, pair.source_ja, ckb, cfg, b, opts.memo);
        o.record = std::move(run.record);
        o.analysis = std::move(run.analysis);
        o.hits = std::move(run.hits);
        if (opts.log != nullptr) {
          json tags = {{"size", size},
                       {"config_hash", result.config_hash},
                       {"hits", hits_to_json(o.hits)}};
          tags["analysis"] = o.analysis ? to_json(*o.analysis) : json(nullptr);
          opts.log->append(*o.record, tags);
        }
      } catch (const std::exception& e) {
        o.error = e.what();
        return;
      }
    }
    o.score = sentence_bleu(tokenize_chars(o.record->output_zh), tokenize_chars(pair.target_zh),
                            cfg.smoothing_epsilon);
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.max_concurrency, 1)), test.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < test.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < test.size(); i = next++) work(i);
      });
    }
  }

  std::vector<double> scores;
  for (const auto& o : result.outcomes) {
    if (o.score) scores.push_back(o.score->score);
  }
  result.completion = static_cast<double>(scores.size()) / static_cast<double>(test.size());
  result.mean_bleu = scores.empty() ? 0.0 : macro_average(scores);
  return result;
}

const ConditionResult* SweepReport::condition(std::size_t size) const {
  for (const auto& c : conditions) {
    if (c.size == size) return &c;
  }
  return nullptr;
}

SweepReport sweep(const Corpus& test, const Corpus& kb, const PipelineConfig& cfg,
                  Backends& b, const SweepOptions& opts) {
  cfg.validate(kb.size());
  if (cfg.sizes.front() != 0) {
    throw InvalidArgument("sweep: sizes must include 0 as the baseline");
  }
  if (test.empty()) throw InvalidArgument("sweep: test set is empty");
  if (auto report = check_disjoint(test, kb); !report.empty()) {
    throw ContaminationError(std::move(report));
  }

  SweepReport out;
  out.config = cfg.to_json();
  out.kb_fingerprint = fingerprint(kb);
  out.test_fingerprint = fingerprint(test);
  out.kb_size = kb.size();
  out.smoothing_epsilon = cfg.smoothing_epsilon;
  out.config_hash = config_hash(json{{"config", out.config},
                                     {"kb_fingerprint", out.kb_fingerprint},
                                     {"test_fingerprint", out.test_fingerprint}});
  for (const auto& p : test.pairs) out.test_ids.push_back(p.id);

  ResumeStore store;
  std::optional<RunLog> log;
  if (opts.run_log) {
    if (opts.resume) store = ResumeStore::load(*opts.run_log);
    log.emplace(*opts.run_log);
  }
  AnalysisMemo memo;
  ConditionOptions copts{log ? &*log : nullptr, &store, &memo};

  for (std::size_t size : cfg.sizes) {
    out.conditions.push_back(run_condition(test, kb, size, cfg, b, copts));
  }

  const double baseline = out.conditions.front().mean_bleu;
  for (const auto& c : out.conditions) {
    GainRow row;
    row.size = c.size;
    row.mean_bleu = c.mean_bleu;
    if (c.size != 0) {
      row.abs_gain = c.mean_bleu - baseline;
      if (baseline > 0.0) {
        const Gain g = gains(c.mean_bleu, baseline);
        row.abs_gain = g.absolute;
        row.rel_gain_pct = g.relative_pct;
      }
    }
    out.rows.push_back(row);
  }
  out.valid = std::all_of(out.conditions.begin(), out.conditions.end(),
                          [](const ConditionResult& c) { return c.complete(); });
  return out;
}

json SweepReport::to_json() const {
  json rows_j = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    rows_j.push_back({{"size", r.size},
                      {"mean_bleu", r.mean_bleu},
                      {"abs_gain", r.abs_gain ? json(*r.abs_gain) : json(nullptr)},
                      {"rel_gain_pct", r.rel_gain_pct ? json(*r.rel_gain_pct) : json(nullptr)},
                      {"completion", conditions.at(i).completion}});
  }

  json conds = json::array();
  for (const auto& c : conditions) {
    json sentences = json::array();
    for (const auto& o : c.outcomes) {
      json s = {{"test_id", o.test_id}, {"hits", hits_to_json(o.hits)}};
      s["output_zh"] = o.record ? json(o.record->output_zh) : json(nullptr);
      s["bleu"] = o.score ? o.score->to_json() : json(nullptr);
      s["a1"] = o.analysis ? json(std::string(ragmt::to_string(o.analysis->a1))) : json(nullptr);
      s["a2"] = o.analysis ? json(join_letters(o.analysis->a2)) : json(nullptr);
      if (!o.error.empty()) s["error"] = o.error;
      sentences.push_back(std::move(s));
    }
    conds.push_back({{"size", c.size},
                     {"config_hash", c.config_hash},
                     {"config_snapshot", c.config_snapshot},
                     {"completion", c.completion},
                     {"mean_bleu", c.mean_bleu},
                     {"sentences", sentences}});
  }

  json per_sentence = json::array();
  for (std::size_t t = 0; t < test_ids.size(); ++t) {
    json scores = json::object();
    for (const auto& c : conditions) {
      const auto& o = c.outcomes.at(t);
      scores[std::to_string(c.size)] = o.score ? json(o.score->score) : json(nullptr);
    }
    per_sentence.push_back({{"test_id", test_ids[t]}, {"scores", scores}});
  }

  return {{"format", "ragmt-sweep-report/1"},
          {"config", config},
          {"config_hash", config_hash},
          {"kb_fingerprint", kb_fingerprint},
          {"test_fingerprint", test_fingerprint},
          {"kb_size", kb_size},
          {"test_size", test_ids.size()},
          {"smoothing_epsilon", smoothing_epsilon},
          {"valid", valid},
          {"rows", rows_j},
          {"conditions", conds},
          {"per_sentence", per_sentence}};
}

}  // namespace ragmt
