#include "ragmt/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ragmt/error.hpp"
#include "ragmt/hashing.hpp"
#include "ragmt/text.hpp"

namespace ragmt {
namespace {

using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void add_feature(std::vector<double>& acc, std::string_view feature, std::uint64_t seed) {
  std::string key = std::to_string(seed);
  key += '\x1F';
  key += feature;
  std::uint64_t state = hash64(key);
  for (double& v : acc) {
    const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    v += 2.0 * unit - 1.0;
  }
}

}  // namespace

Embedding mock_embed(std::string_view text_in, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("mock_embed: dim must be >= 1");
  const std::u32string chars = text::to_u32(text::normalize(text_in));
  std::vector<double> acc(dim, 0.0);

  add_feature(acc, "^" + (chars.empty() ? std::string("$") : text::to_utf8(chars.front())), seed);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    add_feature(acc, "1:" + text::to_utf8(chars[i]), seed);
    if (i + 1 < chars.size()) {
      add_feature(acc, "2:" + text::to_utf8(chars.substr(i, 2)), seed);
    }
  }
  if (!chars.empty()) add_feature(acc, text::to_utf8(chars.back()) + "$", seed);

  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    // Only reachable if every feature cancelled exactly; fall back to an axis.
    acc[0] = 1.0;
    norm = 1.0;
  }
  for (double& v : acc) v /= norm;
  return Embedding{std::move(acc), "mock-hash-v1/d" + std::to_string(dim) + "/s" +
                                       std::to_string(seed)};
}

MockEncoder::MockEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw InvalidArgument("mock encoder dim must be >= 1");
}

std::string MockEncoder::id() const {
  return "mock-hash-v1/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
}

std::vector<double> MockEncoder::encode(std::string_view normalized_text) {
  ++calls_;
  return mock_embed(normalized_text, dim_, seed_).vector;
}

RemoteEncoder::RemoteEncoder(EndpointConfig endpoint, std::size_t dim)
    : client_(std::move(endpoint)), dim_(dim) {}

std::string RemoteEncoder::id() const { return "remote:" + client_.config().model; }

std::vector<double> RemoteEncoder::encode(std::string_view normalized_text) {
  return client_.embed(std::string(normalized_text));
}

Embedding embed(std::string_view text_in, Encoder& encoder, EmbeddingCache& cache,
                const RetryPolicy& retry) {
  const std::string normalized = text::normalize(text_in);
  if (normalized.empty()) throw InvalidArgument("embed: empty text");
  const std::string encoder_id = encoder.id();
  if (auto hit = cache.find(encoder_id, normalized)) {
    return Embedding{std::move(*hit), encoder_id};
  }
  auto vec = call_with_retries(retry, "embedding request",
                               [&](int) { return encoder.encode(normalized); });
  if (vec.size() != encoder.dim()) {
    throw DimensionMismatch("encoder " + encoder_id + " returned a " +
                            std::to_string(vec.size()) + "-dim vector, expected " +
                            std::to_string(encoder.dim()));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw Error("encoder " + encoder_id + " returned a non-finite value");
  }
  cache.store(encoder_id, normalized, vec);
  return Embedding{std::move(vec), encoder_id};
}

json RetrieverConfig::to_json() const {
  return {{"k", k}, {"normalize_vectors", normalize_vectors}};
}

RetrieverConfig RetrieverConfig::from_json(const json& j) {
  RetrieverConfig c;
  c.k = j.value("k", c.k);
  c.normalize_vectors = j.value("normalize_vectors", c.normalize_vectors);
  if (c.k < 1) throw InvalidArgument("retriever k must be >= 1");
  return c;
}

json to_json(const RetrievalHit& hit) {
  return {{"pair_id", hit.pair_id},
          {"distance", hit.distance},
          {"similarity", hit.similarity},
          {"rank", hit.rank}};
}

RetrievalHit hit_from_json(const json& j) {
  return RetrievalHit{j.at("pair_id").get<std::string>(), j.at("distance").get<double>(),
                      j.at("similarity").get<double>(), j.at("rank").get<std::size_t>()};
}

double similarity(double distance) {
  if (!std::isfinite(distance) || distance < 0.0) {
    throw InvalidArgument("similarity: distance must be finite and >= 0");
  }
  return 1.0 / (1.0 + distance);
}

VectorIndex build_index(const Corpus& kb, Encoder& encoder, EmbeddingCache& cache,
                        const RetryPolicy& retry) {
  if (kb.empty()) throw InvalidArgument("build_index: knowledge base is empty");
  VectorIndex index(encoder.dim(), encoder.id());
  for (const auto& pair : kb.pairs) {
    index.add(pair.id, embed(pair.source_ja, encoder, cache, retry));
  }
  return index;
}

std::vector<RetrievalHit> search(const VectorIndex& index, const Embedding& query,
                                 const RetrieverConfig& cfg) {
  if (cfg.k < 1) throw InvalidArgument("search: k must be >= 1");
  if (query.encoder_id != index.encoder_id()) {
    throw DimensionMismatch("query encoder '" + query.encoder_id +
                            "' does not match index encoder '" + index.encoder_id() + "'");
  }
  if (query.dim() != index.dim()) {
    throw DimensionMismatch("query has dim " + std::to_string(query.dim()) +
                            ", index has dim " + std::to_string(index.dim()));
  }

  std::vector<double> q = query.vector;
  if (cfg.normalize_vectors) {
    double n = 0.0;
    for (double v : q) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) {
      for (double& v : q) v /= n;
    }
  }

  const std::size_t n = index.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = index.vector(i);
    double scale = 1.0;
    if (cfg.normalize_vectors) {
      double en = 0.0;
      for (float v : e) en += static_cast<double>(v) * v;
      en = std::sqrt(en);
      if (en > 0.0) scale = 1.0 / en;
    }
    double acc = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
      const double diff = static_cast<double>(e[d]) * scale - q[d];
      acc += diff * diff;
    }
    dist[i] = std::sqrt(acc);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(cfg.k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });

  std::vector<RetrievalHit> hits;
  hits.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    hits.push_back({index.id(i), dist[i], similarity(dist[i]), r + 1});
  }
  return hits;
}

}  // namespace ragmt
