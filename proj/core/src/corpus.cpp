#include "ragmt/corpus.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "ragmt/error.hpp"
#include "ragmt/hashing.hpp"
#include "ragmt/text.hpp"

namespace ragmt {
namespace {

using json = nlohmann::json;

std::string line_prefix(std::string_view source, std::size_t line) {
  std::ostringstream os;
  os << source << ": line " << line << ": ";
  return os.str();
}

std::string required_string(const json& record, const char* field,
                            std::string_view source, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw FormatError(line_prefix(source, line) + "missing field " + field);
  }
  if (!it->is_string()) {
    throw FormatError(line_prefix(source, line) + "field " + field +
                      " must be a string");
  }
  return it->get<std::string>();
}

PairMeta parse_meta(const json& meta, std::string_view source, std::size_t line) {
  PairMeta out;
  if (meta.is_null()) return out;
  if (!meta.is_object()) {
    throw FormatError(line_prefix(source, line) + "meta must be an object");
  }
  try {
    out.genre = meta.value("genre", std::string{});
    out.work = meta.value("work", std::string{});
    out.has_nmcc = meta.value("has_nmcc", true);
    out.provenance_note = meta.value("provenance_note", std::string{});
    if (auto tags = meta.find("error_tags"); tags != meta.end() && !tags->is_null()) {
      for (const auto& tag : *tags) {
        const auto c = risk_from_token(tag.get<std::string>());
        if (!c) {
          throw FormatError(line_prefix(source, line) + "unknown error tag '" +
                            tag.get<std::string>() + "'");
        }
        out.error_tags.insert(*c);
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(line_prefix(source, line) + "bad meta: " + e.what());
  }
  return out;
}

struct RawRecord {
  SentencePair pair;
  std::size_t line = 0;
};

void finish_record(RawRecord& rec, std::string_view source) {
  auto& p = rec.pair;
  for (auto* field : {&p.id, &p.source_ja, &p.target_zh}) {
    if (!text::is_valid_utf8(*field)) {
      throw FormatError(line_prefix(source, rec.line) + "invalid UTF-8");
    }
  }
  p.id = text::normalize(p.id);
  p.source_ja = text::normalize(p.source_ja);
  p.target_zh = text::normalize(p.target_zh);
  if (p.id.empty()) throw FormatError(line_prefix(source, rec.line) + "empty field id");
  if (p.source_ja.empty()) {
    throw FormatError(line_prefix(source, rec.line) + "empty field source_ja");
  }
  if (p.target_zh.empty()) {
    throw FormatError(line_prefix(source, rec.line) + "empty field target_zh");
  }
}

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased and independent of the
  // standard library's distribution implementation.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

std::string_view to_string(CorpusRole r) {
  return r == CorpusRole::KnowledgeBase ? "knowledge_base" : "test_set";
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = text::ascii_lower(path.extension().string());
  if (ext == ".tsv" || ext == ".txt") return CorpusFormat::Tsv;
  return CorpusFormat::Jsonl;
}

const SentencePair* Corpus::find(std::string_view id) const {
  for (const auto& p : pairs) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

json ContaminationReport::to_json() const {
  json exact = json::array();
  for (const auto& m : exact_matches) {
    exact.push_back({{"test_id", m.test_id}, {"kb_id", m.kb_id}});
  }
  json near = json::array();
  for (const auto& m : near_matches) {
    near.push_back({{"test_id", m.test_id}, {"kb_id", m.kb_id}, {"reason", m.reason}});
  }
  return {{"exact_matches", exact}, {"near_matches", near}, {"clean", empty()}};
}

Corpus parse_pairs(std::istream& in, CorpusFormat format, CorpusRole role,
                   std::string_view source) {
  Corpus corpus;
  corpus.role = role;
  std::unordered_map<std::string, std::size_t> id_lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (text::trim(line).empty()) continue;

    RawRecord rec;
    rec.line = line_no;
    if (format == CorpusFormat::Jsonl) {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        throw FormatError(line_prefix(source, line_no) + "malformed JSON: " + e.what());
      }
      if (!record.is_object()) {
        throw FormatError(line_prefix(source, line_no) + "record must be a JSON object");
      }
      rec.pair.id = required_string(record, "id", source, line_no);
      rec.pair.source_ja = required_string(record, "source_ja", source, line_no);
      rec.pair.target_zh = required_string(record, "target_zh", source, line_no);
      if (auto meta = record.find("meta"); meta != record.end()) {
        rec.pair.meta = parse_meta(*meta, source, line_no);
      }
    } else {
      std::vector<std::string> fields;
      std::size_t start = 0;
      for (;;) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      static constexpr const char* kNames[] = {"id", "source_ja", "target_zh"};
      if (fields.size() < 3) {
        throw FormatError(line_prefix(source, line_no) + "missing field " +
                          kNames[fields.size()]);
      }
      if (fields.size() > 3) {
        throw FormatError(line_prefix(source, line_no) + "expected 3 tab-separated fields, got " +
                          std::to_string(fields.size()));
      }
      rec.pair.id = fields[0];
      rec.pair.source_ja = fields[1];
      rec.pair.target_zh = fields[2];
    }
    finish_record(rec, source);

    if (role == CorpusRole::KnowledgeBase && !rec.pair.meta.has_nmcc) {
      throw FormatError(line_prefix(source, line_no) +
                        "knowledge-base pair '" + rec.pair.id + "' has has_nmcc=false");
    }
    auto [it, inserted] = id_lines.emplace(rec.pair.id, line_no);
    if (!inserted) {
      std::ostringstream os;
      os << source << ": duplicate id '" << rec.pair.id << "' at lines " << it->second
         << " and " << line_no;
      throw FormatError(os.str());
    }
    corpus.pairs.push_back(std::move(rec.pair));
  }
  return corpus;
}

Corpus load_pairs(const std::filesystem::path& path, CorpusFormat format,
                  CorpusRole role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_pairs(in, format, role, path.string());
}

CleanResult dedup_and_clean(const Corpus& corpus) {
  CleanResult result;
  result.corpus.role = corpus.role;
  result.corpus.ordering_seed = corpus.ordering_seed;
  std::map<std::pair<std::string, std::string>, std::string> seen;
  for (const auto& original : corpus.pairs) {
    SentencePair p = original;
    p.source_ja = text::normalize(p.source_ja);
    p.target_zh = text::normalize(p.target_zh);
    auto [it, inserted] = seen.emplace(std::make_pair(p.source_ja, p.target_zh), p.id);
    if (!inserted) {
      result.removed.push_back(p.id);
      continue;
    }
    result.corpus.pairs.push_back(std::move(p));
  }
  return result;
}

ContaminationReport check_disjoint(const Corpus& test, const Corpus& kb) {
  std::unordered_map<std::string, std::vector<std::string>> by_exact;
  std::unordered_map<std::string, std::vector<std::string>> by_no_space;
  std::unordered_map<std::string, std::vector<std::string>> by_no_punct;
  for (const auto& p : kb.pairs) {
    by_exact[text::normalize(p.source_ja)].push_back(p.id);
    by_no_space[text::strip_space(p.source_ja)].push_back(p.id);
    by_no_punct[text::strip_space_and_punct(p.source_ja)].push_back(p.id);
  }

  ContaminationReport report;
  for (const auto& t : test.pairs) {
    std::vector<std::string> reported;
    auto already = [&](const std::string& id) {
      for (const auto& r : reported) {
        if (r == id) return true;
      }
      return false;
    };
    if (auto it = by_exact.find(text::normalize(t.source_ja)); it != by_exact.end()) {
      for (const auto& kb_id : it->second) {
        report.exact_matches.push_back({t.id, kb_id});
        reported.push_back(kb_id);
      }
    }
    if (auto it = by_no_space.find(text::strip_space(t.source_ja)); it != by_no_space.end()) {
      for (const auto& kb_id : it->second) {
        if (already(kb_id)) continue;
        report.near_matches.push_back({t.id, kb_id, "whitespace-insensitive match"});
        reported.push_back(kb_id);
      }
    }
    const std::string stripped = text::strip_space_and_punct(t.source_ja);
    if (stripped.empty()) continue;  // punctuation-only sentences carry no signal
    if (auto it = by_no_punct.find(stripped); it != by_no_punct.end()) {
      for (const auto& kb_id : it->second) {
        if (already(kb_id)) continue;
        report.near_matches.push_back(
            {t.id, kb_id, "whitespace- and punctuation-insensitive match"});
        reported.push_back(kb_id);
      }
    }
  }
  return report;
}

std::vector<std::size_t> seeded_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(gen, i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Corpus subset(const Corpus& kb, std::size_t size, std::uint64_t seed) {
  if (size > kb.size()) {
    throw InvalidArgument("subset size " + std::to_string(size) +
                          " exceeds knowledge base size " + std::to_string(kb.size()));
  }
  Corpus out;
  out.role = kb.role;
  out.ordering_seed = seed;
  const auto order = seeded_order(kb.size(), seed);
  out.pairs.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.pairs.push_back(kb.pairs[order[i]]);
  return out;
}

json to_json(const SentencePair& pair) {
  json tags = json::array();
  for (RiskCategory c : pair.meta.error_tags) tags.push_back(std::string(key(c)));
  return {{"id", pair.id},
          {"source_ja", pair.source_ja},
          {"target_zh", pair.target_zh},
          {"meta",
           {{"genre", pair.meta.genre},
            {"work", pair.meta.work},
            {"has_nmcc", pair.meta.has_nmcc},
            {"error_tags", tags},
            {"provenance_note", pair.meta.provenance_note}}}};
}

SentencePair pair_from_json(const json& j) {
  std::istringstream in(j.dump());
  Corpus c = parse_pairs(in, CorpusFormat::Jsonl, CorpusRole::TestSet, "<json>");
  if (c.pairs.size() != 1) throw FormatError("expected exactly one pair");
  return c.pairs.front();
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.pairs) out << to_json(p).dump() << '\n';
}

std::string fingerprint(const Corpus& corpus) {
  std::string buf;
  for (const auto& p : corpus.pairs) {
    buf += p.id;
    buf += '\x1F';
    buf += p.source_ja;
    buf += '\x1F';
    buf += p.target_zh;
    buf += '\x1E';
  }
  return short_hash(buf);
}

}  // namespace ragmt
