#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gctm/sparse.hpp"

namespace gctm {

enum class Split { kTrain, kValidation, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct RawDocument {
  std::string id;
  std::string text;
  std::optional<std::string> label;
};

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::string> label;
};

struct PreprocessConfig {
  std::size_t min_token_length = 3;
  bool remove_digit_tokens = true;
  std::unordered_set<std::string> stopwords;  // empty -> builtin list

  // The versioned English stopword list shipped with the project.
  static const std::vector<std::string>& builtin_stopwords();
  static PreprocessConfig defaults();
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  // -1 when absent.
  int id_of(const std::string& word) const;
  bool contains(const std::string& word) const { return id_of(word) >= 0; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  std::unordered_map<std::string, Split> splits;
  // Cached token-id sequences aligned with documents (vocab-pruned).
  std::vector<std::vector<int>> token_ids;

  std::size_t size() const { return documents.size(); }
  Split split_of(const std::string& doc_id) const;
  std::vector<int> doc_indices(Split s) const;
  std::size_t count(Split s) const;

  // Rebuilds token_ids and prunes document tokens to the vocabulary.
  void reindex();
};

struct CooccurrenceStats {
  int window_length = 0;
  SparseMatrix pair_counts;            // v x v, symmetric, window-presence counts
  std::vector<std::int64_t> word_counts;  // windows containing each word
  std::int64_t total_windows = 0;
};

struct DocEmbeddingTable {
  int dim = 0;
  std::map<std::string, Eigen::VectorXd> vectors;

  bool has(const std::string& doc_id) const { return vectors.count(doc_id) > 0; }
  // Doc ids in `required` that have no embedding row.
  std::vector<std::string> missing_ids(const std::vector<std::string>& required) const;

  void save(const std::string& path) const;
};

// --- Operations ------------------------------------------------------------

// Lowercases, splits on non-alphanumeric runs, then drops stopwords,
// punctuation-only runs, tokens containing digits and tokens shorter than
// the configured minimum. Empty input yields an empty list.
std::vector<std::string> tokenize_and_clean(const std::string& raw_text,
                                            const PreprocessConfig& rules);

// Top max_size words by document frequency over the given documents
// (callers pass the training split). Ties break lexicographically. If fewer
// distinct words exist than max_size, all are kept.
Vocabulary build_vocabulary(const std::vector<const Document*>& train_docs, int max_size);

// Deterministic split assignment: ratios (train, val, test) must sum to 1
// within 1e-9; sizes match ratios within one document.
std::unordered_map<std::string, Split> split_corpus(const std::vector<RawDocument>& docs,
                                                    double train_ratio, double val_ratio,
                                                    double test_ratio, std::uint64_t seed);

// N x v TF-IDF with raw-count tf and smoothed idf
// ln((1 + N_train) / (1 + df_train)) + 1; df comes from the training split
// only. Documents emptied by preprocessing keep an all-zero row.
SparseMatrix compute_tfidf(const Corpus& corpus);

// Raw-count bag of words (N x v); alternative reconstruction target.
SparseMatrix compute_bow(const Corpus& corpus);

// Sliding windows of window_length tokens, stride 1, within each training
// document; a document shorter than the window contributes one truncated
// window. A word pair is counted at most once per window.
CooccurrenceStats count_cooccurrence(const Corpus& corpus, int window_length);

// TSV with "dim=<int>" header. Throws FormatError on inconsistent rows.
DocEmbeddingTable load_embeddings(const std::string& path);

// One JSON object per line: {"id": str, "text": str, "label": optional str}.
std::vector<RawDocument> load_jsonl_corpus(const std::string& path);

// Full preprocessing pipeline: tokenize, split, build vocabulary on the
// training split, prune tokens to the vocabulary.
Corpus build_corpus(const std::vector<RawDocument>& raw, const PreprocessConfig& rules,
                    int vocab_size, double train_ratio, double val_ratio,
                    double test_ratio, std::uint64_t split_seed);

}  // namespace gctm
