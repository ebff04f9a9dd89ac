#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gctm/corpus.hpp"
#include "gctm/graphs.hpp"
#include "gctm/ntm.hpp"

namespace gctm {

struct TopicList {
  struct Topic {
    std::vector<int> word_ids;      // weights non-increasing, ties by word id
    std::vector<double> weights;
  };
  std::vector<Topic> topics;
  int top_n = 10;

  std::vector<std::vector<std::string>> words(const Vocabulary& vocab) const;
};

// Per topic, the n vocabulary words with the largest beta weights.
TopicList extract_topics(const DecoderParams& decoder, const Vocabulary& vocab, int top_n = 10);

// Document-level co-occurrence sets for one corpus split, backing the
// coherence metric. Word -> bitset over the split's documents.
class CoherenceReference {
 public:
  CoherenceReference(const Corpus& corpus, Split split);

  std::int64_t doc_count() const { return doc_count_; }
  std::int64_t doc_freq(int word) const;
  std::int64_t joint_doc_freq(int a, int b) const;
  std::string descriptor() const { return descriptor_; }

 private:
  std::int64_t doc_count_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;  // v rows of ceil(N/64) words
  std::string descriptor_;
};

struct CoherenceReport {
  std::vector<double> per_topic;
  double mean = 0.0;
  std::string reference;
};

// Mean NPMI over all unordered pairs of each topic's top words, with
// document-level co-occurrence probabilities. Never-co-occurring pairs
// contribute -1.
CoherenceReport topic_coherence_npmi(const TopicList& topics, const CoherenceReference& ref);

struct SimilarityDiagnostic {
  double mean_negative = 0.0;  // cosine(TF-IDF prototype, x-)
  double mean_positive = 0.0;  // cosine(TF-IDF prototype, x+)
  int documents = 0;
};

// Sample-quality diagnostic in edge_perturb feature space: mean cosine
// similarity between each document's TF-IDF prototype and its generated
// negative (and positive) sample. Zero-vector pairs contribute 0.
SimilarityDiagnostic similarity_diagnostic(const SparseMatrix& tfidf,
                                           const std::vector<int>& rows,
                                           const WordGraph& graph_pos,
                                           const WordGraph& graph_neg);

struct RepresentationExport {
  nn::Matrix theta;                     // n_split x k, simplex rows
  std::vector<std::string> doc_ids;
  std::vector<std::string> labels;      // empty strings where unlabeled
  bool has_labels = false;
};

// Evaluation-mode (eps = 0) document-topic representations for one split.
RepresentationExport export_representations(ModelParams& model, const Corpus& corpus,
                                            const SparseMatrix& tfidf,
                                            const DocEmbeddingTable* embeddings,
                                            Split split);

struct RandomForestConfig {
  int trees = 500;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

// Random-forest accuracy of test representations given train representations.
// Labels are arbitrary strings; throws ConfigError when training labels
// contain a single class.
double classify(const nn::Matrix& train_x, const std::vector<std::string>& train_labels,
                const nn::Matrix& test_x, const std::vector<std::string>& test_labels,
                const RandomForestConfig& config);

}  // namespace gctm
