#include <benchmark/benchmark.h>

#include "gctm/corpus.hpp"
#include "support/fixtures.hpp"

namespace {

std::vector<gctm::RawDocument> bench_raw(int docs, int doc_len) {
  gctm::test::PlantedCorpusConfig cfg;
  cfg.n_docs = docs;
  cfg.n_topics = 8;
  cfg.words_per_topic = 50;
  cfg.doc_len = doc_len;
  return gctm::test::make_planted_corpus(cfg);
}

void BM_TokenizeAndClean(benchmark::State& state) {
  const auto raw = bench_raw(64, static_cast<int>(state.range(0)));
  const auto rules = gctm::PreprocessConfig::defaults();
  for (auto _ : state) {
    for (const auto& doc : raw) {
      benchmark::DoNotOptimize(gctm::tokenize_and_clean(doc.text, rules));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_TokenizeAndClean)->Arg(64)->Arg(256)->Arg(1024);

void BM_CountCooccurrence(benchmark::State& state) {
  gctm::test::PlantedCorpusConfig cfg;
  cfg.n_docs = static_cast<int>(state.range(0));
  cfg.n_topics = 8;
  cfg.words_per_topic = 50;
  cfg.doc_len = 120;
  gctm::Corpus corpus = gctm::test::make_planted_ready(cfg, 1.0, 0.0, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gctm::count_cooccurrence(corpus, 20));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountCooccurrence)->Arg(128)->Arg(512);

void BM_ComputeTfidf(benchmark::State& state) {
  gctm::test::PlantedCorpusConfig cfg;
  cfg.n_docs = static_cast<int>(state.range(0));
  cfg.doc_len = 120;
  gctm::Corpus corpus = gctm::test::make_planted_ready(cfg, 1.0, 0.0, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gctm::compute_tfidf(corpus));
  }
}
BENCHMARK(BM_ComputeTfidf)->Arg(512)->Arg(2048);

}  // namespace
