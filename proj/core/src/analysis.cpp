#include "ragmt/analysis.hpp"

#include <algorithm>

#include "ragmt/error.hpp"
#include "ragmt/templates.hpp"
#include "ragmt/text.hpp"

namespace ragmt {
namespace {

using json = nlohmann::json;

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// `needle` occurs in `hay` with no ASCII letter immediately on either side.
bool contains_word(std::string_view hay, std::string_view needle) {
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_ascii_alpha(hay[pos - 1]);
    const auto end = pos + needle.size();
    const bool right_ok = end >= hay.size() || !is_ascii_alpha(hay[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

// Payload of the last line that starts with "ANSWER:" (markdown emphasis and
// heading marks tolerated), or the whole text when no such line exists.
std::string_view answer_scope(std::string_view raw) {
  std::string_view best;
  bool found = false;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(start, end - start);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '*' ||
                               line[i] == '#' || line[i] == '>' || line[i] == '-')) {
      ++i;
    }
    line.remove_prefix(i);
    if (line.size() >= 7 && text::ascii_lower(line.substr(0, 7)) == "answer:") {
      std::string_view payload = line.substr(7);
      if (payload.find_first_not_of(" \t*\r") != std::string_view::npos) {
        best = payload;
        found = true;
      }
    }
    if (end == raw.size()) break;
    start = end + 1;
  }
  return found ? best : raw;
}

std::vector<std::string> as_responses(const json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  if (j.is_array() && !j.empty()) return j.get<std::vector<std::string>>();
  throw InvalidArgument("scripted judge responses must be a string or non-empty list");
}

}  // namespace

// --- scripted backend ------------------------------------------------------

ScriptedJudge::TaskScript ScriptedJudge::parse_task(const json& j) {
  TaskScript t;
  if (j.is_string() || j.is_array()) {
    t.defaults = as_responses(j);
    return t;
  }
  t.defaults = as_responses(j.at("default"));
  if (auto rules = j.find("rules"); rules != j.end()) {
    for (const auto& r : *rules) {
      Rule rule;
      rule.contains = r.value("contains", std::string{});
      rule.equals = r.value("equals", std::string{});
      if (rule.contains.empty() && rule.equals.empty()) {
        throw InvalidArgument("scripted judge rule needs 'contains' or 'equals'");
      }
      rule.responses = as_responses(r.at("responses"));
      t.rules.push_back(std::move(rule));
    }
  }
  return t;
}

ScriptedJudge::ScriptedJudge(const json& script) {
  try {
    id_ = script.value("id", std::string("scripted-stub"));
    a1_ = parse_task(script.at("a1"));
    a2_ = parse_task(script.at("a2"));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad scripted judge script: ") + e.what());
  }
}

ScriptedJudge::ScriptedJudge(std::string a1, std::string a2) : id_("scripted-stub") {
  a1_.defaults = {std::move(a1)};
  a2_.defaults = {std::move(a2)};
}

std::string ScriptedJudge::judge(const JudgmentRequest& request) {
  const TaskScript& script = request.task == AnalysisTask::NmccType ? a1_ : a2_;
  const std::vector<std::string>* responses = &script.defaults;
  for (const auto& rule : script.rules) {
    const bool hit = rule.equals.empty() ? contains(request.sentence, rule.contains)
                                         : request.sentence == rule.equals;
    if (hit) {
      responses = &rule.responses;
      break;
    }
  }
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.attempt, 0)),
                                         responses->size() - 1);
  return (*responses)[idx];
}

// --- remote backend --------------------------------------------------------

RemoteJudge::RemoteJudge(EndpointConfig endpoint, json params)
    : client_(std::move(endpoint)), params_(std::move(params)) {}

std::string RemoteJudge::id() const { return "remote-llm:" + client_.config().model; }

std::string RemoteJudge::judge(const JudgmentRequest& request) {
  return client_.complete(std::string(request.prompt), params_);
}

// --- serialization ----------------------------------------------------------

json to_json(const AnalysisResult& r) {
  json a2 = json::array();
  for (RiskCategory c : r.a2) a2.push_back(std::string(1, letter(c)));
  return {{"a1", std::string(to_string(r.a1))},
          {"a2", a2},
          {"raw_a1_response", r.raw_a1_response},
          {"raw_a2_response", r.raw_a2_response},
          {"backend_id", r.backend_id},
          {"a1_parse_failed", r.a1_parse_failed},
          {"a2_parse_failed", r.a2_parse_failed}};
}

AnalysisResult analysis_from_json(const json& j) {
  AnalysisResult r;
  const auto a1 = nmcc_type_from_string(j.at("a1").get<std::string>());
  if (!a1) throw FormatError("bad a1 value " + j.at("a1").dump());
  r.a1 = *a1;
  for (const auto& tok : j.at("a2")) {
    const auto c = risk_from_token(tok.get<std::string>());
    if (!c) throw FormatError("bad a2 value " + tok.dump());
    r.a2.insert(*c);
  }
  r.raw_a1_response = j.value("raw_a1_response", std::string{});
  r.raw_a2_response = j.value("raw_a2_response", std::string{});
  r.backend_id = j.value("backend_id", std::string{});
  r.a1_parse_failed = j.value("a1_parse_failed", false);
  r.a2_parse_failed = j.value("a2_parse_failed", false);
  return r;
}

// --- prompts and parsing ------------------------------------------------------

std::string render_a1_prompt(std::string_view sentence) {
  return templates::fill(templates::a1_prompt(), {{"SL", std::string(sentence)}});
}

std::string render_a2_prompt(std::string_view sentence) {
  return templates::fill(templates::a2_prompt(), {{"SL", std::string(sentence)}});
}

NmccType parse_a1_response(std::string_view raw) {
  const std::string_view scope = answer_scope(raw);
  const std::string lower = text::ascii_lower(scope);
  const bool inner = contains_word(lower, "inner") || contains(scope, "内の関係") ||
                     contains(scope, "内関係");
  const bool outer = contains_word(lower, "outer") || contains(scope, "外の関係") ||
                     contains(scope, "外関係");
  if (inner == outer) return NmccType::Unknown;
  return inner ? NmccType::Inner : NmccType::Outer;
}

RiskParse parse_a2_detailed(std::string_view raw) {
  const std::string_view scope = answer_scope(raw);
  RiskParse out;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    const char c = scope[i];
    if (c < 'A' || c > 'D') continue;
    const bool left_ok = i == 0 || !is_ascii_alnum(scope[i - 1]);
    const bool right_ok = i + 1 >= scope.size() || !is_ascii_alnum(scope[i + 1]);
    if (left_ok && right_ok) out.risks.insert(kAllRiskCategories[static_cast<std::size_t>(c - 'A')]);
  }
  const std::string lower = text::ascii_lower(scope);
  static constexpr std::pair<std::string_view, RiskCategory> kNames[] = {
      {"lexical choice", RiskCategory::LexicalChoice},
      {"nmcc handling", RiskCategory::NmccHandling},
      {"word order", RiskCategory::WordOrder},
      {"word-order", RiskCategory::WordOrder},
      {"style/register", RiskCategory::StyleRegister},
      {"style and register", RiskCategory::StyleRegister},
      {"style / register", RiskCategory::StyleRegister},
  };
  for (const auto& [name, cat] : kNames) {
    if (contains_word(lower, name)) out.risks.insert(cat);
  }
  out.recognized = !out.risks.empty() || contains_word(lower, "none") ||
                   contains_word(lower, "no risks") || contains_word(lower, "no risk") ||
                   contains_word(lower, "no errors");
  return out;
}

RiskSet parse_a2_response(std::string_view raw) { return parse_a2_detailed(raw).risks; }

NmccJudgment classify_nmcc(std::string_view sentence, JudgmentBackend& backend,
                           const AnalysisPolicy& policy) {
  if (text::trim(sentence).empty()) throw InvalidArgument("classify_nmcc: empty sentence");
  const std::string prompt = render_a1_prompt(sentence);
  NmccJudgment out;
  const int attempts = 1 + std::max(policy.max_parse_retries, 0);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    out.raw = call_with_retries(policy.transport, "A1 judgment", [&](int) {
      return backend.judge({AnalysisTask::NmccType, sentence, prompt, attempt});
    });
    out.attempts = attempt + 1;
    out.type = parse_a1_response(out.raw);
    if (out.type != NmccType::Unknown) return out;
  }
  out.parse_failed = true;
  return out;
}

RiskJudgment predict_risks(std::string_view sentence, JudgmentBackend& backend,
                           const AnalysisPolicy& policy) {
  if (text::trim(sentence).empty()) throw InvalidArgument("predict_risks: empty sentence");
  const std::string prompt = render_a2_prompt(sentence);
  RiskJudgment out;
  const int attempts = 1 + std::max(policy.max_parse_retries, 0);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    out.raw = call_with_retries(policy.transport, "A2 judgment", [&](int) {
      return backend.judge({AnalysisTask::RiskPrediction, sentence, prompt, attempt});
    });
    out.attempts = attempt + 1;
    auto parsed = parse_a2_detailed(out.raw);
    if (parsed.recognized) {
      out.risks = std::move(parsed.risks);
      return out;
    }
  }
  out.parse_failed = true;
  out.risks.clear();
  return out;
}

AnalysisResult analyze(std::string_view sentence, JudgmentBackend& backend,
                       const AnalysisPolicy& policy) {
  auto a1 = classify_nmcc(sentence, backend, policy);
  auto a2 = predict_risks(sentence, backend, policy);
  AnalysisResult r;
  r.a1 = a1.type;
  r.a2 = std::move(a2.risks);
  r.raw_a1_response = std::move(a1.raw);
  r.raw_a2_response = std::move(a2.raw);
  r.backend_id = backend.id();
  r.a1_parse_failed = a1.parse_failed;
  r.a2_parse_failed = a2.parse_failed;
  return r;
}

}  // namespace ragmt
