#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gctm/config.hpp"
#include "gctm/corpus.hpp"
#include "gctm/eval.hpp"
#include "gctm/graphs.hpp"
#include "gctm/manifest.hpp"
#include "gctm/trainer.hpp"

namespace gctm {

// Owning bundle behind TrainArtifacts pointers.
struct TrainArtifactsBundle {
  Corpus corpus;
  SparseMatrix tfidf;
  SparseMatrix bow;
  WordGraph graph_pos;
  WordGraph graph_neg;
  std::optional<DocEmbeddingTable> embeddings;

  TrainArtifacts view() const;
};

// Stage-wise pipeline over a cache directory. Every stage is keyed by a
// content hash of its config subset plus its upstream hashes; a stage whose
// hash matches the manifest and whose outputs exist is skipped. Downstream
// stages refuse to run against missing or stale upstream artifacts
// (StaleArtifactError).
class Pipeline {
 public:
  Pipeline(Config config, std::string root_dir);

  const Config& config() const { return config_; }
  const std::string& root() const { return root_; }

  std::uint64_t preprocess_hash() const;
  std::uint64_t graphs_hash() const;
  std::uint64_t train_hash() const;
  std::uint64_t ablate_hash() const;
  std::uint64_t eval_hash() const;

  // Each runner returns true on a cache hit (nothing recomputed).
  bool run_preprocess();
  bool run_build_graphs();
  bool run_train();
  bool run_ablate();
  bool run_eval();
  void run_report();

  // Artifact accessors for downstream consumers and tests.
  Corpus load_corpus() const;
  SparseMatrix load_tfidf() const;
  SparseMatrix load_bow() const;
  CooccurrenceStats load_cooccurrence() const;
  WordGraph load_word_graph(Polarity polarity) const;
  std::optional<DocEmbeddingTable> load_embedding_table() const;
  std::vector<RunRecord> load_train_records() const;
  std::map<AblationMode, std::vector<RunRecord>> load_ablate_records() const;

  std::string preprocess_dir() const;
  std::string graphs_dir() const;
  std::string train_dir() const;
  std::string ablate_dir() const;
  std::string eval_dir() const;
  std::string report_dir() const;

  // Per-seed failures from the last run_train/run_ablate call (completed
  // seeds still produce artifacts and the aggregate).
  const std::vector<std::pair<std::uint64_t, std::string>>& seed_failures() const {
    return seed_failures_;
  }

 private:
  void require_fresh(const std::string& stage, std::uint64_t expected_hash) const;
  TrainArtifactsBundle load_artifacts_bundle() const;

  Config config_;
  std::string root_;
  std::vector<std::pair<std::uint64_t, std::string>> seed_failures_;
};

}  // namespace gctm
