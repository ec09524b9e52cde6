#include <algorithm>
#include <fstream>
#include <sstream>

#include "ragmt/harness.hpp"

namespace ragmt {

using json = nlohmann::json;

namespace {

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n') {
      out += "<br>";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string size_label(std::size_t size) {
  return size == 0 ? "0 (RAG disabled)" : std::to_string(size);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::string table1_markdown(const SweepReport& report) {
  std::ostringstream os;
  os << "<!-- config_hash: " << report.config_hash << " -->\n";
  os << "| RAG size | Average BLEU | Absolute gain vs. baseline (RAG disabled) "
        "| Relative gain vs. baseline (RAG disabled, %) |\n";
  os << "|---|---|---|---|\n";
  for (const auto& row : report.rows) {
    os << "| " << size_label(row.size) << " | " << format_fixed(row.mean_bleu, 2) << " | "
       << (row.abs_gain ? format_abs_gain(*row.abs_gain) : "—") << " | "
       << (row.rel_gain_pct ? format_rel_gain(*row.rel_gain_pct) : "—") << " |\n";
  }
  if (!report.valid) os << "\nWARNING: at least one condition is incomplete; results are invalid.\n";
  return os.str();
}

std::string table1_csv(const SweepReport& report) {
  std::ostringstream os;
  os << "rag_size,average_bleu,absolute_gain,relative_gain_pct,completion,config_hash\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    os << row.size << ',' << format_fixed(row.mean_bleu, 2) << ','
       << (row.abs_gain ? format_abs_gain(*row.abs_gain) : "") << ','
       << (row.rel_gain_pct ? format_fixed(*row.rel_gain_pct, 1) : "") << ','
       << format_fixed(report.conditions.at(i).completion, 4) << ',' << report.config_hash
       << '\n';
  }
  return os.str();
}

std::string scores_jsonl(const SweepReport& report) {
  std::ostringstream os;
  for (const auto& c : report.conditions) {
    for (const auto& o : c.outcomes) {
      json row = {{"kind", "sentence"},   {"test_id", o.test_id},
                  {"size", c.size},       {"config_hash", c.config_hash},
                  {"epsilon", report.smoothing_epsilon}};
      if (o.score) {
        row["score"] = o.score->score;
        row["precisions"] = o.score->precisions;
        row["bp"] = o.score->bp;
        row["hyp_len"] = o.score->hyp_len;
        row["ref_len"] = o.score->ref_len;
      } else {
        row["score"] = nullptr;
        row["error"] = o.error;
      }
      os << row.dump() << '\n';
    }
    os << json{{"kind", "summary"},
               {"size", c.size},
               {"config_hash", c.config_hash},
               {"epsilon", report.smoothing_epsilon},
               {"mean_bleu", c.mean_bleu},
               {"completion", c.completion}}
              .dump()
       << '\n';
  }
  return os.str();
}

std::string case_report(const SweepReport& report, const std::vector<std::string>& test_ids,
                        const std::vector<std::size_t>& sizes, const Corpus* test) {
  for (std::size_t size : sizes) {
    if (report.condition(size) == nullptr) {
      throw InvalidArgument("case_report: size " + std::to_string(size) + " not in report");
    }
  }
  std::ostringstream os;
  for (const auto& id : test_ids) {
    const auto it = std::find(report.test_ids.begin(), report.test_ids.end(), id);
    if (it == report.test_ids.end()) {
      throw InvalidArgument("case_report: test id '" + id + "' not in report");
    }
    const auto idx = static_cast<std::size_t>(it - report.test_ids.begin());
    os << "### " << id << "\n\n";
    if (test != nullptr) {
      if (const SentencePair* p = test->find(id)) os << "SL: " << p->source_ja << "\n\n";
    }
    os << "| RAG size | BLEU | Target-language output (Chinese) |\n";
    os << "|---|---|---|\n";
    for (std::size_t size : sizes) {
      const auto& o = report.condition(size)->outcomes.at(idx);
      os << "| RAG=" << size << " | " << (o.score ? format_fixed(o.score->score, 2) : "n/a")
         << " | " << (o.record ? md_cell(o.record->output_zh) : md_cell("error: " + o.error))
         << " |\n";
    }
    os << '\n';
  }
  return os.str();
}

void write_sweep_artifacts(const SweepReport& report, const std::filesystem::path& out_dir,
                           const Corpus& test, const json& invocation) {
  std::filesystem::create_directories(out_dir);
  json j = report.to_json();
  if (!invocation.is_null()) j["invocation"] = invocation;
  write_file(out_dir / "report.json", j.dump(2) + "\n");
  write_file(out_dir / "table1.md", table1_markdown(report));
  write_file(out_dir / "table1.csv", table1_csv(report));
  write_file(out_dir / "scores.jsonl", scores_jsonl(report));

  const auto& opts = report.config.at("report");
  std::vector<std::string> ids = opts.at("case_ids").get<std::vector<std::string>>();
  if (ids.empty()) {
    for (std::size_t i = 0; i < std::min<std::size_t>(2, report.test_ids.size()); ++i) {
      ids.push_back(report.test_ids[i]);
    }
  }
  std::vector<std::size_t> sizes;
  for (std::size_t s : opts.at("case_sizes").get<std::vector<std::size_t>>()) {
    if (report.condition(s) != nullptr) sizes.push_back(s);
  }
  if (sizes.empty()) {
    for (const auto& c : report.conditions) sizes.push_back(c.size);
  }
  write_file(out_dir / "cases.md", "<!-- config_hash: " + report.config_hash + " -->\n" +
                                       case_report(report, ids, sizes, &test));
}

}  // namespace ragmt
