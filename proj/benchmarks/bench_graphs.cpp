#include <benchmark/benchmark.h>

#include "gctm/augment.hpp"
#include "gctm/graphs.hpp"
#include "support/fixtures.hpp"

namespace {

struct GraphBench {
  gctm::Corpus corpus;
  gctm::SparseMatrix tfidf;
  gctm::CooccurrenceStats stats;
  gctm::NpmiMatrix npmi;

  explicit GraphBench(int docs) {
    gctm::test::PlantedCorpusConfig cfg;
    cfg.n_docs = docs;
    cfg.n_topics = 8;
    cfg.words_per_topic = 50;
    cfg.doc_len = 120;
    corpus = gctm::test::make_planted_ready(cfg, 1.0, 0.0, 0.0);
    tfidf = gctm::compute_tfidf(corpus);
    stats = gctm::count_cooccurrence(corpus, 20);
    npmi = gctm::compute_npmi(stats);
  }
};

void BM_ComputeNpmi(benchmark::State& state) {
  GraphBench bench(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gctm::compute_npmi(bench.stats));
  }
}
BENCHMARK(BM_ComputeNpmi)->Arg(256)->Arg(1024);

void BM_BuildWordGraph(benchmark::State& state) {
  GraphBench bench(512);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gctm::build_word_graph(bench.npmi, gctm::Polarity::kPositive, 0.2));
  }
}
BENCHMARK(BM_BuildWordGraph);

void BM_EdgePerturbationAll(benchmark::State& state) {
  GraphBench bench(static_cast<int>(state.range(0)));
  const gctm::WordGraph pos =
      gctm::build_word_graph(bench.npmi, gctm::Polarity::kPositive, 0.2);
  const gctm::nn::SpMatRow dwbg = bench.tfidf.to_eigen_row_major();
  const gctm::nn::SpMatRow adj(pos.normalized.to_eigen());
  for (auto _ : state) {
    benchmark::DoNotOptimize(gctm::edge_perturbation_all(dwbg, adj));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EdgePerturbationAll)->Arg(256)->Arg(1024);

}  // namespace
