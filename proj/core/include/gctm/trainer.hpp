#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gctm/config.hpp"
#include "gctm/corpus.hpp"
#include "gctm/eval.hpp"
#include "gctm/graphs.hpp"
#include "gctm/ntm.hpp"

namespace gctm {

struct TrainConfig {
  int topics = 50;
  int hidden = 300;
  double lr = 0.002;
  int epochs = 400;
  int batch_size = 200;
  double alpha = 1.6487212707001282;  // e^0.5
  double gamma = 1.0;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double clip_norm = 5.0;
  int gcn_layers = 2;
  int gcn_hidden = 100;
  Activation gcn_final_activation = Activation::kIdentity;
  AugmentMode mode = AugmentMode::kGcn;
  AblationMode ablation = AblationMode::kFull;
  ReconTarget recon_target = ReconTarget::kTfidf;
  bool background = true;
  bool contextual = false;
  int eval_every = 10;  // validation-coherence cadence, in epochs
  int top_words = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  static TrainConfig from_config(const Config& cfg);
  void validate() const;
};

struct RunRecord {
  std::uint64_t seed = 0;
  AblationMode ablation = AblationMode::kFull;
  std::vector<double> elbo_trace;   // per-epoch batch means
  std::vector<double> cl_trace;
  std::vector<double> total_trace;
  std::vector<std::pair<int, double>> val_npmi_trace;  // (epoch, npmi)
  double best_val_npmi = 0.0;
  int best_epoch = -1;
  std::string best_checkpoint_path;
  double final_total_loss = 0.0;
  double wall_seconds = 0.0;

  std::string to_json() const;
  static RunRecord from_json(const std::string& text);
  void save(const std::string& path) const;
  static RunRecord load(const std::string& path);
};

// Everything the loop consumes from earlier pipeline stages.
struct TrainArtifacts {
  const Corpus* corpus = nullptr;
  const SparseMatrix* tfidf = nullptr;
  const SparseMatrix* bow = nullptr;      // optional; required for bow targets
  const WordGraph* graph_pos = nullptr;
  const WordGraph* graph_neg = nullptr;
  const DocEmbeddingTable* embeddings = nullptr;  // nullptr -> contextual off
};

struct TrainResult {
  ModelParams model;
  RunRecord record;
};

// Joint training for a single seed. Deterministic given (config, seed).
// Checkpoints the best-validation-NPMI model under checkpoint_dir (ignored
// when empty: the best model is still returned in memory).
TrainResult train(const TrainArtifacts& artifacts, const TrainConfig& config,
                  std::uint64_t seed, const std::string& checkpoint_dir,
                  std::uint64_t config_hash = 0);

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_seed;
};

AggregateStat aggregate(std::vector<double> values);

struct MultiSeedResult {
  std::vector<RunRecord> records;           // completed seeds only
  std::vector<std::pair<std::uint64_t, std::string>> failures;  // (seed, reason)
  AggregateStat val_npmi;
};

// Runs every configured seed; individual failures are recorded and the
// aggregate covers completed seeds. Throws Error when all seeds fail.
MultiSeedResult run_multi_seed(const TrainArtifacts& artifacts, const TrainConfig& config,
                               const std::string& checkpoint_dir,
                               std::uint64_t config_hash = 0);

// Four loss compositions sharing seeds and data order.
std::map<AblationMode, MultiSeedResult> ablate(const TrainArtifacts& artifacts,
                                               const TrainConfig& config,
                                               const std::string& checkpoint_dir,
                                               std::uint64_t config_hash = 0);

}  // namespace gctm
