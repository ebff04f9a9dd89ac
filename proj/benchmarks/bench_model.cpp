#include <benchmark/benchmark.h>

#include "gctm/ntm.hpp"
#include "gctm/trainer.hpp"
#include "support/fixtures.hpp"

namespace {

struct ModelBench {
  gctm::Corpus corpus;
  gctm::SparseMatrix tfidf;
  gctm::SparseMatrix bow;
  gctm::WordGraph pos, neg;
  gctm::ModelParams model;
  gctm::BatchInputs inputs;

  ModelBench(int batch, int topics) {
    gctm::test::PlantedCorpusConfig cfg;
    cfg.n_docs = 512;
    cfg.n_topics = 8;
    cfg.words_per_topic = 50;
    cfg.doc_len = 120;
    corpus = gctm::test::make_planted_ready(cfg, 1.0, 0.0, 0.0);
    tfidf = gctm::compute_tfidf(corpus);
    bow = gctm::compute_bow(corpus);
    gctm::NpmiMatrix npmi = gctm::compute_npmi(gctm::count_cooccurrence(corpus, 20));
    pos = gctm::build_word_graph(npmi, gctm::Polarity::kPositive, 0.2);
    neg = gctm::build_word_graph(npmi, gctm::Polarity::kNegative, 0.2);

    gctm::ModelDims dims;
    dims.vocab = corpus.vocabulary.size();
    dims.topics = topics;
    dims.hidden = 300;
    dims.gcn_hidden = 100;
    dims.gcn_layers = 2;
    model = gctm::ModelParams::init(dims, gctm::AugmentMode::kGcn, true,
                                    gctm::Activation::kIdentity, 3);

    const gctm::nn::SpMatRow rows = tfidf.to_eigen_row_major();
    std::vector<Eigen::Triplet<double>> trips;
    for (int b = 0; b < batch; ++b) {
      for (gctm::nn::SpMatRow::InnerIterator it(rows, b); it; ++it) {
        trips.emplace_back(b, it.col(), it.value());
      }
    }
    auto slice = std::make_shared<gctm::nn::SpMat>(batch, dims.vocab);
    slice->setFromTriplets(trips.begin(), trips.end());
    inputs.dwbg_rows = slice;
    inputs.recon_target = gctm::nn::Matrix(*slice);
    inputs.adj_pos = std::make_shared<const gctm::nn::SpMat>(pos.normalized.to_eigen());
    inputs.adj_neg = std::make_shared<const gctm::nn::SpMat>(neg.normalized.to_eigen());
    gctm::Rng rng(5);
    auto draw = [&](gctm::nn::Matrix& m) {
      m.resize(batch, topics);
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal();
      }
    };
    draw(inputs.eps);
    draw(inputs.eps_pos);
    draw(inputs.eps_neg);
  }
};

void BM_ForwardBatch(benchmark::State& state) {
  ModelBench bench(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) {
    gctm::nn::Tape tape;
    benchmark::DoNotOptimize(gctm::forward_batch(tape, bench.model, bench.inputs,
                                                 gctm::AblationMode::kFull,
                                                 std::exp(0.5), 1.0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(32)->Arg(200);

void BM_TrainStep(benchmark::State& state) {
  ModelBench bench(static_cast<int>(state.range(0)), 50);
  gctm::nn::AdamConfig cfg;
  gctm::nn::Adam adam(bench.model.parameters(), cfg);
  for (auto _ : state) {
    gctm::nn::Tape tape;
    gctm::BatchOutputs out = gctm::forward_batch(
        tape, bench.model, bench.inputs, gctm::AblationMode::kFull, std::exp(0.5), 1.0);
    tape.backward(out.total);
    adam.step();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(200);

void BM_InferTheta(benchmark::State& state) {
  ModelBench bench(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gctm::infer_theta(bench.model, *bench.inputs.dwbg_rows, gctm::nn::Matrix()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InferTheta)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
