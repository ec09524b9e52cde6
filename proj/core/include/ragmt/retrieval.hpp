#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmt/chat_client.hpp"
#include "ragmt/corpus.hpp"
#include "ragmt/retry.hpp"

namespace ragmt {

struct Embedding {
  std::vector<double> vector;
  std::string encoder_id;

  std::size_t dim() const noexcept { return vector.size(); }
};

/// Maps normalized text to a fixed-length vector. Must be safe for
/// concurrent calls.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> encode(std::string_view normalized_text) = 0;
};

/// Deterministic unit-norm embedding built by feature hashing: every
/// character unigram and boundary-marked bigram of the normalized text adds a
/// pseudo-random direction seeded from (feature, seed). Texts that share most
/// characters land close together; equal texts give equal vectors.
Embedding mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class MockEncoder final : public Encoder {
 public:
  MockEncoder(std::size_t dim, std::uint64_t seed);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<double> encode(std::string_view normalized_text) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::atomic<std::size_t> calls_{0};
};

/// OpenAI-compatible /embeddings endpoint. The declared dimension is checked
/// against every returned vector.
class RemoteEncoder final : public Encoder {
 public:
  RemoteEncoder(EndpointConfig endpoint, std::size_t dim);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<double> encode(std::string_view normalized_text) override;

 private:
  ChatClient client_;
  std::size_t dim_;
};

/// Persistent (encoder_id, normalized text) -> vector store. Backed by an
/// append-only JSONL file when a path is given, memory-only otherwise.
/// Concurrent lookups share a lock; stores are serialized.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path path);

  std::optional<std::vector<double>> find(std::string_view encoder_id,
                                          std::string_view normalized_text) const;
  void store(std::string_view encoder_id, std::string_view normalized_text,
             const std::vector<double>& vector);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  static std::string make_key(std::string_view encoder_id, std::string_view text);

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

/// Cached embedding of `text` (normalized first). Encoder transport failures
/// are retried per `retry`; a vector whose length differs from the encoder's
/// declared dimension raises DimensionMismatch.
Embedding embed(std::string_view text, Encoder& encoder, EmbeddingCache& cache,
                const RetryPolicy& retry = {});

struct RetrieverConfig {
  std::size_t k = 5;
  bool normalize_vectors = false;

  nlohmann::json to_json() const;
  static RetrieverConfig from_json(const nlohmann::json& j);
};

struct RetrievalHit {
  std::string pair_id;
  double distance = 0.0;
  double similarity = 1.0;
  std::size_t rank = 1;

  bool operator==(const RetrievalHit&) const = default;
};

nlohmann::json to_json(const RetrievalHit& hit);
RetrievalHit hit_from_json(const nlohmann::json& j);

/// 1 / (1 + d). Rejects negative and non-finite distances.
double similarity(double distance);

/// Exact flat L2 index. Vectors are stored as float32, the snapshot
/// precision, so a loaded snapshot searches identically to the original.
///
/// Snapshot layout (little-endian):
///   magic     8 bytes  "RAGMTIDX"
///   version   u32      1
///   dim       u32
///   id_len    u32, then encoder_id bytes (UTF-8)
///   count     u64
///   count x { u32 pair_id length, pair_id bytes, dim x f32 }
class VectorIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  VectorIndex(std::size_t dim, std::string encoder_id);

  void add(std::string pair_id, const Embedding& embedding);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& encoder_id() const noexcept { return encoder_id_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  std::span<const float> vector(std::size_t i) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static VectorIndex load(std::istream& in);
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::string encoder_id_;
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_set_;
  std::vector<float> data_;
};

/// One entry per pair in corpus order. Any embedding failure aborts the
/// build; an empty corpus is rejected.
VectorIndex build_index(const Corpus& kb, Encoder& encoder, EmbeddingCache& cache,
                        const RetryPolicy& retry = {});

/// Exact top-k by ascending L2 distance; ties keep insertion order. Returns
/// min(k, size) hits ranked 1..n with similarity = 1/(1+d).
std::vector<RetrievalHit> search(const VectorIndex& index, const Embedding& query,
                                 const RetrieverConfig& cfg);

}  // namespace ragmt
