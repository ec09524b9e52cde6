#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "ragmt/bleu.hpp"
#include "ragmt/retrieval.hpp"

namespace {

std::string random_ja(std::mt19937_64& rng, std::size_t len) {
  std::u32string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(U'一' + static_cast<char32_t>(rng() % 0x400));
  std::string out;
  for (char32_t c : s) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
  return out;
}

void BM_MockEmbed(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const std::string text = random_ja(rng, 30);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ragmt::mock_embed(text, static_cast<std::size_t>(state.range(0)), 7));
  }
}
BENCHMARK(BM_MockEmbed)->Arg(64)->Arg(1536);

void BM_Search(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 64;
  std::mt19937_64 rng(2);
  ragmt::VectorIndex index(dim, "mock-hash-v1/d64/s7");
  for (std::size_t i = 0; i < n; ++i) {
    index.add("p" + std::to_string(i), ragmt::mock_embed(random_ja(rng, 20), dim, 7));
  }
  const ragmt::Embedding q = ragmt::mock_embed(random_ja(rng, 20), dim, 7);
  ragmt::RetrieverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ragmt::search(index, q, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Search)->Arg(100)->Arg(2000)->Arg(20000);

void BM_SentenceBleu(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto hyp = ragmt::tokenize_chars(random_ja(rng, len));
  const auto ref = ragmt::tokenize_chars(random_ja(rng, len));
  for (auto _ : state) benchmark::DoNotOptimize(ragmt::sentence_bleu(hyp, ref));
}
BENCHMARK(BM_SentenceBleu)->Arg(20)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
