#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/risk.hpp"

namespace ragmt {

struct PairMeta {
  std::string genre;
  std::string work;
  bool has_nmcc = true;
  RiskSet error_tags;
  std::string provenance_note;

  bool operator==(const PairMeta&) const = default;
};

/// One Japanese source sentence with its Chinese translation.
struct SentencePair {
  std::string id;
  std::string source_ja;
  std::string target_zh;
  PairMeta meta;

  bool operator==(const SentencePair&) const = default;
};

enum class CorpusRole { KnowledgeBase, TestSet };
enum class CorpusFormat { Jsonl, Tsv };

std::string_view to_string(CorpusRole r);
CorpusFormat format_from_path(const std::filesystem::path& path);

struct Corpus {
  std::vector<SentencePair> pairs;
  CorpusRole role = CorpusRole::KnowledgeBase;
  std::uint64_t ordering_seed = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  /// Linear lookup by id; nullptr when absent.
  const SentencePair* find(std::string_view id) const;

  bool operator==(const Corpus&) const = default;
};

struct ContaminationReport {
  struct ExactMatch {
    std::string test_id;
    std::string kb_id;
  };
  struct NearMatch {
    std::string test_id;
    std::string kb_id;
    std::string reason;
  };

  std::vector<ExactMatch> exact_matches;
  std::vector<NearMatch> near_matches;

  bool empty() const noexcept { return exact_matches.empty() && near_matches.empty(); }
  nlohmann::json to_json() const;
};

struct CleanResult {
  Corpus corpus;
  std::vector<std::string> removed;
};

/// Loads a UTF-8 corpus. Fields are NFC-normalized, trimmed, and internal
/// whitespace runs collapsed. Errors name the offending line. Knowledge-base
/// corpora reject pairs flagged has_nmcc=false.
Corpus load_pairs(const std::filesystem::path& path, CorpusFormat format,
                  CorpusRole role = CorpusRole::KnowledgeBase);
Corpus parse_pairs(std::istream& in, CorpusFormat format, CorpusRole role,
                   std::string_view source_name = "<stream>");

/// Drops pairs whose normalized (source, target) repeats an earlier pair.
CleanResult dedup_and_clean(const Corpus& corpus);

/// Exact: normalized sources equal. Near: equal once whitespace (and then
/// punctuation) is removed.
ContaminationReport check_disjoint(const Corpus& test, const Corpus& kb);

/// Position permutation of [0, n) from a seeded Fisher-Yates shuffle.
std::vector<std::size_t> seeded_order(std::size_t n, std::uint64_t seed);

/// First `size` pairs of the seed-shuffled ordering. Subsets for one seed are
/// nested prefixes of each other.
Corpus subset(const Corpus& kb, std::size_t size, std::uint64_t seed);

nlohmann::json to_json(const SentencePair& pair);
SentencePair pair_from_json(const nlohmann::json& j);
void write_jsonl(std::ostream& out, const Corpus& corpus);

/// SHA-256 (hex, 16 chars) over ids and texts in order.
std::string fingerprint(const Corpus& corpus);

}  // namespace ragmt
