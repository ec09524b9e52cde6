#include "ragmt/session.hpp"

#include <algorithm>
#include <fstream>

#include "ragmt/error.hpp"

namespace ragmt {

using json = nlohmann::json;

json Session::to_json() const {
  json hits_j = json::array();
  for (const auto& h : hits) {
    json entry = ragmt::to_json(h.hit);
    entry["jp"] = h.jp;
    entry["zh"] = h.zh;
    entry["selected"] = h.selected;
    entry["justification"] = h.justification;
    hits_j.push_back(std::move(entry));
  }
  json versions = json::array();
  for (std::size_t i = 0; i < prompt_versions.size(); ++i) {
    const auto& v = prompt_versions[i];
    versions.push_back({{"version", i + 1},
                        {"note", v.note},
                        {"selected_ranks", v.selected_ranks},
                        {"prompt", ragmt::to_json(v.prompt)}});
  }
  json outputs_j = json::array();
  for (const auto& r : outputs) outputs_j.push_back(ragmt::to_json(r));
  json edits = json::array();
  for (const auto& e : post_edits) edits.push_back({{"text", e.text}, {"note", e.note}});
  json scores_j = json::array();
  for (const auto& s : scores) {
    scores_j.push_back({{"target", s.target},
                        {"hypothesis", s.hypothesis},
                        {"reference", s.reference},
                        {"bleu", s.bleu.to_json()}});
  }
  return {{"session_id", id},
          {"sl", sl},
          {"status", status == SessionStatus::Open ? "open" : "archived"},
          {"analysis", analysis ? ragmt::to_json(*analysis) : json(nullptr)},
          {"retrieved", retrieved},
          {"hits", hits_j},
          {"prompt_versions", versions},
          {"outputs", outputs_j},
          {"post_edits", edits},
          {"scores", scores_j},
          {"event_count", event_count}};
}

json SessionEvent::to_json() const {
  return {{"seq", seq}, {"type", type}, {"payload", payload}};
}

SessionEvent SessionEvent::from_json(const json& j) {
  return SessionEvent{j.at("seq").get<std::uint64_t>(), j.at("type").get<std::string>(),
                      j.value("payload", json::object())};
}

void apply(Session& s, const SessionEvent& e) {
  try {
    if (e.seq != s.event_count) {
      throw FormatError("event sequence gap: expected " + std::to_string(s.event_count) +
                        ", got " + std::to_string(e.seq));
    }
    if (s.status == SessionStatus::Archived) {
      throw FormatError("event '" + e.type + "' after archive");
    }
    const json& p = e.payload;
    if (e.type == "created") {
      if (e.seq != 0) throw FormatError("'created' must be the first event");
      s.id = p.at("session_id").get<std::string>();
      s.sl = p.at("sl").get<std::string>();
    } else if (e.seq == 0) {
      throw FormatError("first event must be 'created'");
    } else if (e.type == "analyzed") {
      s.analysis = analysis_from_json(p.at("analysis"));
    } else if (e.type == "retrieved") {
      s.retrieved = true;
      s.hits.clear();
      for (const auto& h : p.at("hits")) {
        s.hits.push_back(HitSelection{hit_from_json(h.at("hit")), h.at("jp").get<std::string>(),
                                      h.at("zh").get<std::string>(), true, ""});
      }
    } else if (e.type == "selection") {
      const auto rank = p.at("rank").get<std::size_t>();
      auto it = std::find_if(s.hits.begin(), s.hits.end(),
                             [&](const HitSelection& h) { return h.hit.rank == rank; });
      if (it == s.hits.end()) throw FormatError("selection for unknown rank");
      it->selected = p.at("selected").get<bool>();
      it->justification = p.at("justification").get<std::string>();
    } else if (e.type == "composed") {
      s.prompt_versions.push_back(PromptVersion{prompt_from_json(p.at("prompt")),
                                                p.value("note", std::string{}),
                                                p.at("selected_ranks").get<std::vector<std::size_t>>()});
    } else if (e.type == "generated") {
      s.outputs.push_back(record_from_json(p.at("record")));
    } else if (e.type == "post_edited") {
      s.post_edits.push_back(PostEdit{p.at("text").get<std::string>(), p.value("note", std::string{})});
    } else if (e.type == "scored") {
      s.scores.push_back(ScoreEntry{p.at("target").get<std::string>(),
                                    p.at("hypothesis").get<std::string>(),
                                    p.at("reference").get<std::string>(),
                                    BleuScore::from_json(p.at("bleu"))});
    } else if (e.type == "archived") {
      s.status = SessionStatus::Archived;
    } else {
      throw FormatError("unknown session event type '" + e.type + "'");
    }
  } catch (const json::exception& ex) {
    throw FormatError("bad '" + e.type + "' event payload: " + ex.what());
  }
  ++s.event_count;
}

Session replay(std::span<const SessionEvent> events) {
  Session s;
  for (const auto& e : events) apply(s, e);
  return s;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::file_for(const std::string& session_id) const {
  if (session_id.empty() || session_id.find_first_of("/\\.") != std::string::npos) {
    throw InvalidArgument("bad session id '" + session_id + "'");
  }
  return dir_ / (session_id + ".jsonl");
}

void SessionStore::append(const std::string& session_id, const SessionEvent& event) {
  std::ofstream out(file_for(session_id), std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to session log for " + session_id);
  out << event.to_json().dump() << '\n';
  out.flush();
  if (!out) throw Error("failed writing session log for " + session_id);
}

std::vector<SessionEvent> SessionStore::load(const std::string& session_id) const {
  std::ifstream in(file_for(session_id), std::ios::binary);
  if (!in) throw Error("no session log for " + session_id);
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(SessionEvent::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(file_for(session_id).string() + ": line " + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return events;
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace ragmt
