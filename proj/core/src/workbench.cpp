#include "ragmt/workbench.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "ragmt/analysis.hpp"
#include "ragmt/bleu.hpp"
#include "ragmt/generation.hpp"
#include "ragmt/promptgen.hpp"
#include "ragmt/text.hpp"

namespace ragmt {

using json = nlohmann::json;

namespace {

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[20];
  std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

WorkbenchError missing(const std::string& step, const std::string& what) {
  return WorkbenchError(409, "missing_prerequisite", what + " requires '" + step + "' first", step);
}

std::string latest_text(const Session& s) {
  if (!s.post_edits.empty()) return s.post_edits.back().text;
  if (!s.outputs.empty()) return s.outputs.back().output_zh;
  return {};
}

std::string md_cell(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

json WorkbenchError::to_json() const {
  json j = {{"code", code_}, {"message", what()}};
  if (missing_) j["missing_prerequisite"] = *missing_;
  return j;
}

Workbench::Workbench(WorkbenchContext ctx, std::filesystem::path session_dir)
    : ctx_(std::move(ctx)), store_(std::move(session_dir)) {
  if (ctx_.kb && !ctx_.index) {
    ctx_.index = build_index(*ctx_.kb, *ctx_.backends.encoder, *ctx_.backends.cache,
                             ctx_.backends.retry);
  }
}

std::size_t Workbench::restore() {
  std::size_t n = 0;
  for (const auto& id : store_.list()) {
    auto events = store_.load(id);
    auto e = std::make_shared<Entry>();
    e->session = replay(events);
    std::lock_guard lock(map_mutex_);
    sessions_[id] = std::move(e);
    ++n;
  }
  return n;
}

std::shared_ptr<Workbench::Entry> Workbench::entry(const std::string& id) const {
  std::lock_guard lock(map_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw WorkbenchError(404, "not_found", "unknown session '" + id + "'");
  return it->second;
}

void Workbench::require_open(const Session& s) {
  if (s.status == SessionStatus::Archived) {
    throw WorkbenchError(409, "archived", "session '" + s.id + "' is archived");
  }
}

Session Workbench::commit(Entry& e, std::string type, json payload) {
  SessionEvent ev{e.session.event_count, std::move(type), std::move(payload)};
  Session next = e.session;
  apply(next, ev);
  store_.append(e.session.id, ev);
  e.session = std::move(next);
  return e.session;
}

Session Workbench::create_session(const std::string& sl) {
  if (!text::is_valid_utf8(sl)) throw WorkbenchError(400, "invalid_input", "sl is not valid UTF-8");
  std::string norm = text::normalize(sl);
  if (norm.empty()) throw WorkbenchError(400, "invalid_input", "sl must not be empty");
  auto e = std::make_shared<Entry>();
  std::string id = new_session_id();
  {
    std::lock_guard lock(map_mutex_);
    while (sessions_.count(id)) id = new_session_id();
    e->session.id = id;
    sessions_[id] = e;
  }
  std::lock_guard lock(e->mutex);
  try {
    return commit(*e, "created", {{"session_id", id}, {"sl", norm}});
  } catch (...) {
    std::lock_guard map_lock(map_mutex_);
    sessions_.erase(id);
    throw;
  }
}

Session Workbench::get(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  return e->session;
}

std::vector<std::string> Workbench::list() const {
  std::lock_guard lock(map_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

Session Workbench::analyze(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  AnalysisResult r = ragmt::analyze(e->session.sl, *ctx_.backends.judge, ctx_.backends.analysis_policy);
  return commit(*e, "analyzed", {{"analysis", to_json(r)}});
}

Session Workbench::retrieve(const std::string& id, std::optional<std::size_t> k) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  if (!e->session.analysis) throw missing("analyze", "retrieve");
  if (!ctx_.index || !ctx_.kb) {
    throw WorkbenchError(409, "kb_unavailable", "no knowledge base is loaded");
  }
  RetrieverConfig cfg = ctx_.config.retriever;
  if (k) {
    if (*k == 0) throw WorkbenchError(400, "invalid_input", "k must be positive");
    cfg.k = *k;
  }
  Embedding q = embed(e->session.sl, *ctx_.backends.encoder, *ctx_.backends.cache, ctx_.backends.retry);
  json hits = json::array();
  for (const auto& h : search(*ctx_.index, q, cfg)) {
    const SentencePair* p = ctx_.kb->find(h.pair_id);
    if (!p) throw Error("index entry '" + h.pair_id + "' missing from knowledge base");
    hits.push_back({{"hit", to_json(h)}, {"jp", p->source_ja}, {"zh", p->target_zh}});
  }
  return commit(*e, "retrieved", {{"hits", hits}});
}

Session Workbench::select(const std::string& id, const SelectionChange& change) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  if (!e->session.retrieved) throw missing("retrieve", "select");
  const auto& hits = e->session.hits;
  if (std::none_of(hits.begin(), hits.end(),
                   [&](const HitSelection& h) { return h.hit.rank == change.rank; })) {
    throw WorkbenchError(400, "invalid_input", "no hit with rank " + std::to_string(change.rank));
  }
  return commit(*e, "selection",
                {{"rank", change.rank}, {"selected", change.selected},
                 {"justification", change.justification}});
}

Session Workbench::compose(const std::string& id, const std::vector<SelectionChange>& changes,
                           const std::string& note) {
  auto e = entry(id);
  std::unique_lock lock(e->mutex);
  require_open(e->session);
  if (!e->session.analysis) throw missing("analyze", "compose");
  if (ctx_.index && !e->session.retrieved) throw missing("retrieve", "compose");
  lock.unlock();
  for (const auto& c : changes) select(id, c);
  lock.lock();
  require_open(e->session);

  const Session& s = e->session;
  Corpus picked;
  std::vector<RetrievalHit> hits;
  std::vector<std::size_t> ranks;
  for (const auto& h : s.hits) {
    if (!h.selected) continue;
    picked.pairs.push_back(SentencePair{h.hit.pair_id, h.jp, h.zh, {}});
    hits.push_back(h.hit);
    ranks.push_back(h.hit.rank);
  }
  EnhancedPrompt prompt;
  try {
    prompt = render_prompt(s.sl, s.analysis->a1, s.analysis->a2, hits, picked,
                           ctx_.backends.prompt_template);
  } catch (const InvalidArgument& ex) {
    throw WorkbenchError(400, "invalid_prompt", ex.what());
  }
  return commit(*e, "composed", {{"prompt", to_json(prompt)}, {"note", note}, {"selected_ranks", ranks}});
}

Session Workbench::generate(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  if (e->session.prompt_versions.empty()) throw missing("compose", "generate");
  TranslationRecord r = translate(e->session.prompt_versions.back().prompt, *ctx_.backends.generator,
                                  id, ctx_.backends.retry);
  return commit(*e, "generated", {{"record", to_json(r)}});
}

Session Workbench::post_edit(const std::string& id, const std::string& text_in, const std::string& note) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  if (e->session.outputs.empty()) throw missing("generate", "post_edit");
  if (!text::is_valid_utf8(text_in)) throw WorkbenchError(400, "invalid_input", "text is not valid UTF-8");
  std::string t = text::normalize(text_in);
  if (t.empty()) throw WorkbenchError(400, "invalid_input", "post-edit text must not be empty");
  return commit(*e, "post_edited", {{"text", t}, {"note", note}});
}

Session Workbench::score(const std::string& id, const std::string& reference,
                         std::optional<std::string> target) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  const Session& s = e->session;
  if (s.outputs.empty()) throw missing("generate", "score");
  if (!text::is_valid_utf8(reference)) throw WorkbenchError(400, "invalid_input", "reference is not valid UTF-8");
  std::string ref = text::normalize(reference);
  if (tokenize_chars(ref).empty()) throw WorkbenchError(400, "invalid_input", "reference must not be empty");
  std::string which = target.value_or(s.post_edits.empty() ? "output" : "post_edit");
  std::string hyp;
  if (which == "output") {
    hyp = s.outputs.back().output_zh;
  } else if (which == "post_edit") {
    if (s.post_edits.empty()) throw missing("post_edit", "score of a post-edit");
    hyp = s.post_edits.back().text;
  } else {
    throw WorkbenchError(400, "invalid_input", "target must be 'output' or 'post_edit'");
  }
  BleuScore b = sentence_bleu(tokenize_chars(hyp), tokenize_chars(ref), ctx_.config.smoothing_epsilon);
  return commit(*e, "scored",
                {{"target", which}, {"hypothesis", hyp}, {"reference", ref}, {"bleu", b.to_json()}});
}

Session Workbench::archive(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  require_open(e->session);
  const Session& s = e->session;
  if (s.outputs.empty() && s.post_edits.empty()) throw missing("generate", "archive");
  std::vector<std::size_t> unjustified;
  for (const auto& h : s.hits) {
    if (h.selected && text::trim(h.justification).empty()) unjustified.push_back(h.hit.rank);
  }
  if (!unjustified.empty()) {
    std::string ranks;
    for (auto r : unjustified) ranks += (ranks.empty() ? "" : ", ") + std::to_string(r);
    throw WorkbenchError(409, "unjustified_hits", "selected hits without justification: " + ranks);
  }
  return commit(*e, "archived", json::object());
}

json Workbench::export_worksheet(const std::string& id) const {
  Session s = get(id);
  json j = s.to_json();
  j["format"] = "ragmt-worksheet/1";
  j["template_version"] = ctx_.backends.prompt_template.version;
  j["final_text"] = latest_text(s);
  return j;
}

std::string Workbench::export_worksheet_markdown(const std::string& id) const {
  Session s = get(id);
  std::ostringstream md;
  md << "# Worksheet " << s.id << "\n\n";
  md << "Status: " << (s.status == SessionStatus::Open ? "open" : "archived") << "\n\n";
  md << "SL: " << s.sl << "\n\n";
  md << "## Analysis\n\n";
  if (s.analysis) {
    md << "- NMCC type: " << to_string(s.analysis->a1) << "\n";
    md << "- Predicted risks: " << join_display_names(s.analysis->a2) << "\n\n";
  } else {
    md << "(not analyzed)\n\n";
  }
  md << "## Retrieved examples\n\n";
  if (s.hits.empty()) {
    md << "(none)\n\n";
  } else {
    md << "| rank | id | similarity | selected | JP | ZH | justification |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& h : s.hits) {
      md << "| " << h.hit.rank << " | " << md_cell(h.hit.pair_id) << " | "
         << format_fixed(h.hit.similarity, 4) << " | " << (h.selected ? "yes" : "no") << " | "
         << md_cell(h.jp) << " | " << md_cell(h.zh) << " | " << md_cell(h.justification) << " |\n";
    }
    md << "\n";
  }
  md << "## Prompt versions\n\n";
  for (std::size_t i = 0; i < s.prompt_versions.size(); ++i) {
    const auto& v = s.prompt_versions[i];
    md << "### v" << (i + 1);
    if (!v.note.empty()) md << " (" << v.note << ")";
    md << "\n\n```\n" << v.prompt.rendered << "\n```\n\n";
  }
  md << "## Outputs\n\n";
  for (std::size_t i = 0; i < s.outputs.size(); ++i) {
    md << (i + 1) << ". " << s.outputs[i].output_zh << "\n";
  }
  if (!s.post_edits.empty()) {
    md << "\n## Post-edits\n\n";
    for (std::size_t i = 0; i < s.post_edits.size(); ++i) {
      md << (i + 1) << ". " << s.post_edits[i].text;
      if (!s.post_edits[i].note.empty()) md << " (" << s.post_edits[i].note << ")";
      md << "\n";
    }
  }
  if (!s.scores.empty()) {
    md << "\n## Scores\n\n| target | BLEU | reference |\n|---|---|---|\n";
    for (const auto& sc : s.scores) {
      md << "| " << sc.target << " | " << format_fixed(sc.bleu.score, 2) << " | "
         << md_cell(sc.reference) << " |\n";
    }
  }
  return md.str();
}

Corpus Workbench::export_kb_candidates(const std::vector<std::string>& ids) const {
  Corpus out;
  out.role = CorpusRole::KnowledgeBase;
  for (const auto& id : ids) {
    Session s = get(id);
    if (s.status != SessionStatus::Archived) {
      throw WorkbenchError(409, "not_archived", "session '" + id + "' is not archived");
    }
    PairMeta meta;
    meta.genre = "workbench";
    meta.has_nmcc = true;
    meta.provenance_note = s.id;
    out.pairs.push_back(SentencePair{"wb-" + s.id, text::normalize(s.sl),
                                     text::normalize(latest_text(s)), meta});
  }
  return out;
}

json Workbench::kb_status() const {
  json j = {{"loaded", ctx_.index.has_value()},
            {"k", ctx_.config.retriever.k},
            {"template_version", ctx_.backends.prompt_template.version}};
  if (ctx_.index) {
    j["size"] = ctx_.index->size();
    j["dim"] = ctx_.index->dim();
    j["encoder_id"] = ctx_.index->encoder_id();
  }
  if (ctx_.kb) j["fingerprint"] = fingerprint(*ctx_.kb);
  return j;
}

}  // namespace ragmt
