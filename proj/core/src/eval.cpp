#include "gctm/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "gctm/augment.hpp"
#include "gctm/error.hpp"
#include "gctm/rng.hpp"

namespace gctm {

std::vector<std::vector<std::string>> TopicList::words(const Vocabulary& vocab) const {
  std::vector<std::vector<std::string>> out;
  out.reserve(topics.size());
  for (const Topic& t : topics) {
    std::vector<std::string> row;
    row.reserve(t.word_ids.size());
    for (int id : t.word_ids) row.push_back(vocab.word(id));
    out.push_back(std::move(row));
  }
  return out;
}

TopicList extract_topics(const DecoderParams& decoder, const Vocabulary& vocab, int top_n) {
  const auto k = decoder.topic_word.value.rows();
  const auto v = decoder.topic_word.value.cols();
  const int n = std::min<int>(top_n, static_cast<int>(v));
  TopicList list;
  list.top_n = n;
  list.topics.reserve(static_cast<std::size_t>(k));
  std::vector<int> order(static_cast<std::size_t>(v));
  for (Eigen::Index t = 0; t < k; ++t) {
    std::iota(order.begin(), order.end(), 0);
    const auto& row = decoder.topic_word.value;
    // Descending weight; equal weights resolve to the lower word id.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double wa = row(t, a), wb = row(t, b);
      return wa != wb ? wa > wb : a < b;
    });
    TopicList::Topic topic;
    for (int i = 0; i < n; ++i) {
      topic.word_ids.push_back(order[static_cast<std::size_t>(i)]);
      topic.weights.push_back(row(t, order[static_cast<std::size_t>(i)]));
    }
    list.topics.push_back(std::move(topic));
  }
  if (static_cast<int>(vocab.size()) != static_cast<int>(v)) {
    throw ConfigError("decoder vocabulary width disagrees with vocabulary size");
  }
  return list;
}

CoherenceReference::CoherenceReference(const Corpus& corpus, Split split) {
  const std::vector<int> docs = corpus.doc_indices(split);
  doc_count_ = static_cast<std::int64_t>(docs.size());
  const auto v = static_cast<std::size_t>(corpus.vocabulary.size());
  words_per_row_ = (docs.size() + 63) / 64;
  bits_.assign(v * words_per_row_, 0);
  for (std::size_t pos = 0; pos < docs.size(); ++pos) {
    for (int word : corpus.token_ids[static_cast<std::size_t>(docs[pos])]) {
      bits_[static_cast<std::size_t>(word) * words_per_row_ + pos / 64] |=
          (std::uint64_t{1} << (pos % 64));
    }
  }
  descriptor_ = to_string(split) + " split, document-level co-occurrence, N=" +
                std::to_string(doc_count_);
}

std::int64_t CoherenceReference::doc_freq(int word) const {
  if (word < 0 || static_cast<std::size_t>(word) * words_per_row_ >= bits_.size()) {
    throw ConfigError("topic word id outside the reference vocabulary: " +
                      std::to_string(word));
  }
  const std::uint64_t* row = &bits_[static_cast<std::size_t>(word) * words_per_row_];
  std::int64_t count = 0;
  for (std::size_t i = 0; i < words_per_row_; ++i) count += std::popcount(row[i]);
  return count;
}

std::int64_t CoherenceReference::joint_doc_freq(int a, int b) const {
  if (a < 0 || b < 0 ||
      static_cast<std::size_t>(std::max(a, b)) * words_per_row_ >= bits_.size()) {
    throw ConfigError("topic word id outside the reference vocabulary");
  }
  const std::uint64_t* ra = &bits_[static_cast<std::size_t>(a) * words_per_row_];
  const std::uint64_t* rb = &bits_[static_cast<std::size_t>(b) * words_per_row_];
  std::int64_t count = 0;
  for (std::size_t i = 0; i < words_per_row_; ++i) count += std::popcount(ra[i] & rb[i]);
  return count;
}

CoherenceReport topic_coherence_npmi(const TopicList& topics, const CoherenceReference& ref) {
  if (ref.doc_count() == 0) throw ConfigError("coherence reference corpus is empty");
  const auto total = static_cast<double>(ref.doc_count());
  CoherenceReport report;
  report.reference = ref.descriptor();
  for (const TopicList::Topic& topic : topics.topics) {
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < topic.word_ids.size(); ++i) {
      for (std::size_t j = i + 1; j < topic.word_ids.size(); ++j) {
        const std::int64_t joint = ref.joint_doc_freq(topic.word_ids[i], topic.word_ids[j]);
        double npmi;
        if (joint == 0) {
          npmi = -1.0;
        } else {
          const double p_ij = static_cast<double>(joint) / total;
          if (p_ij >= 1.0) {
            npmi = 1.0;
          } else {
            const double p_i = static_cast<double>(ref.doc_freq(topic.word_ids[i])) / total;
            const double p_j = static_cast<double>(ref.doc_freq(topic.word_ids[j])) / total;
            npmi = std::log(p_ij / (p_i * p_j)) / (-std::log(p_ij));
            npmi = std::clamp(npmi, -1.0, 1.0);
          }
        }
        sum += npmi;
        ++pairs;
      }
    }
    report.per_topic.push_back(pairs > 0 ? sum / pairs : 0.0);
  }
  report.mean = report.per_topic.empty()
                    ? 0.0
                    : std::accumulate(report.per_topic.begin(), report.per_topic.end(), 0.0) /
                          static_cast<double>(report.per_topic.size());
  return report;
}

SimilarityDiagnostic similarity_diagnostic(const SparseMatrix& tfidf,
                                           const std::vector<int>& rows,
                                           const WordGraph& graph_pos,
                                           const WordGraph& graph_neg) {
  const nn::SpMatRow dwbg = tfidf.to_eigen_row_major();
  const nn::SpMatRow adj_pos(graph_pos.normalized.to_eigen());
  const nn::SpMatRow adj_neg(graph_neg.normalized.to_eigen());
  SimilarityDiagnostic diag;
  double sum_neg = 0.0, sum_pos = 0.0;
  for (int row : rows) {
    const Eigen::SparseVector<double> doc = dwbg.row(row);
    const Eigen::VectorXd proto = Eigen::VectorXd(doc);
    const Eigen::VectorXd x_pos = edge_perturbation(doc, adj_pos);
    const Eigen::VectorXd x_neg = edge_perturbation(doc, adj_neg);
    const double norm_p = proto.norm();
    auto cosine = [&](const Eigen::VectorXd& x) {
      const double nx = x.norm();
      return (norm_p == 0.0 || nx == 0.0) ? 0.0 : proto.dot(x) / (norm_p * nx);
    };
    sum_pos += cosine(x_pos);
    sum_neg += cosine(x_neg);
    ++diag.documents;
  }
  if (diag.documents > 0) {
    diag.mean_positive = sum_pos / diag.documents;
    diag.mean_negative = sum_neg / diag.documents;
  }
  return diag;
}

RepresentationExport export_representations(ModelParams& model, const Corpus& corpus,
                                            const SparseMatrix& tfidf,
                                            const DocEmbeddingTable* embeddings,
                                            Split split) {
  const std::vector<int> rows = corpus.doc_indices(split);
  const nn::SpMatRow dwbg = tfidf.to_eigen_row_major();

  nn::SpMat batch(static_cast<Eigen::Index>(rows.size()), tfidf.cols());
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (nn::SpMatRow::InnerIterator it(dwbg, rows[i]); it; ++it) {
        trips.emplace_back(static_cast<Eigen::Index>(i), it.col(), it.value());
      }
    }
    batch.setFromTriplets(trips.begin(), trips.end());
  }

  nn::Matrix emb;
  if (model.context.enabled) {
    if (embeddings == nullptr) {
      throw CoverageError("contextual model requires an embedding table for export");
    }
    emb.resize(static_cast<Eigen::Index>(rows.size()), embeddings->dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string& id = corpus.documents[static_cast<std::size_t>(rows[i])].id;
      auto it = embeddings->vectors.find(id);
      if (it == embeddings->vectors.end()) {
        throw CoverageError("no contextual embedding for doc id: " + id);
      }
      emb.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
    }
  }

  RepresentationExport out;
  out.theta = infer_theta(model, batch, emb);
  out.doc_ids.reserve(rows.size());
  out.labels.reserve(rows.size());
  bool any_label = false, all_labels = true;
  for (int row : rows) {
    const Document& doc = corpus.documents[static_cast<std::size_t>(row)];
    out.doc_ids.push_back(doc.id);
    if (doc.label.has_value()) {
      any_label = true;
      out.labels.push_back(*doc.label);
    } else {
      all_labels = false;
      out.labels.emplace_back();
    }
  }
  out.has_labels = any_label && all_labels;
  return out;
}

// --- random forest ------------------------------------------------------------

namespace {

struct TreeNode {
  int feature = -1;       // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  int label = -1;  // leaf majority class
};

class DecisionTree {
 public:
  void fit(const nn::Matrix& x, const std::vector<int>& y, int n_classes,
           std::vector<int> sample, int mtry, int min_samples_leaf, Rng& rng) {
    n_classes_ = n_classes;
    nodes_.clear();
    build(x, y, std::move(sample), mtry, min_samples_leaf, rng);
  }

  int predict(const Eigen::RowVectorXd& row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
      node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(node)].label;
  }

 private:
  int build(const nn::Matrix& x, const std::vector<int>& y, std::vector<int> sample,
            int mtry, int min_samples_leaf, Rng& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<int> counts(static_cast<std::size_t>(n_classes_), 0);
    for (int i : sample) ++counts[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];
    const int majority = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    const bool pure =
        counts[static_cast<std::size_t>(majority)] == static_cast<int>(sample.size());
    if (pure || static_cast<int>(sample.size()) <= 2 * min_samples_leaf) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }

    // Pick mtry distinct candidate features.
    const int d = static_cast<int>(x.cols());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < mtry && i < d; ++i) {
      std::swap(features[static_cast<std::size_t>(i)],
                features[static_cast<std::size_t>(i) +
                         static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(d - i)))]);
    }

    const double parent_n = static_cast<double>(sample.size());
    double best_score = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> order;
    std::vector<int> left_counts(static_cast<std::size_t>(n_classes_));
    for (int fi = 0; fi < mtry && fi < d; ++fi) {
      const int f = features[static_cast<std::size_t>(fi)];
      order = sample;
      std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::vector<int> right_counts = counts;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        const int label = y[static_cast<std::size_t>(order[pos])];
        ++left_counts[static_cast<std::size_t>(label)];
        --right_counts[static_cast<std::size_t>(label)];
        const double xv = x(order[pos], f);
        const double xn = x(order[pos + 1], f);
        if (xv == xn) continue;
        const auto nl = static_cast<double>(pos + 1);
        const double nr = parent_n - nl;
        if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
        double gl = 0.0, gr = 0.0;
        for (int c = 0; c < n_classes_; ++c) {
          const double pl = left_counts[static_cast<std::size_t>(c)] / nl;
          const double pr = right_counts[static_cast<std::size_t>(c)] / nr;
          gl += pl * pl;
          gr += pr * pr;
        }
        // Weighted Gini purity; larger is better.
        const double score = (nl * gl + nr * gr) / parent_n;
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (xv + xn);
        }
      }
    }

    if (best_feature < 0) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }

    std::vector<int> left, right;
    for (int i : sample) {
      (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    }
    if (left.empty() || right.empty()) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }
    nodes_[static_cast<std::size_t>(id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(x, y, std::move(left), mtry, min_samples_leaf, rng);
    const int r = build(x, y, std::move(right), mtry, min_samples_leaf, rng);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  int n_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double classify(const nn::Matrix& train_x, const std::vector<std::string>& train_labels,
                const nn::Matrix& test_x, const std::vector<std::string>& test_labels,
                const RandomForestConfig& config) {
  if (train_x.rows() != static_cast<Eigen::Index>(train_labels.size()) ||
      test_x.rows() != static_cast<Eigen::Index>(test_labels.size())) {
    throw ConfigError("representation/label row counts disagree");
  }
  std::map<std::string, int> classes;
  for (const std::string& label : train_labels) classes.emplace(label, 0);
  int next = 0;
  for (auto& [_, id] : classes) id = next++;
  if (classes.size() < 2) {
    throw ConfigError("classification requires at least two label classes, got " +
                      std::to_string(classes.size()));
  }
  std::vector<int> y_train(train_labels.size());
  for (std::size_t i = 0; i < train_labels.size(); ++i) {
    y_train[i] = classes.at(train_labels[i]);
  }

  const auto n = static_cast<int>(train_x.rows());
  const int mtry =
      std::max(1, static_cast<int>(std::sqrt(static_cast<double>(train_x.cols()))));
  Rng rng(config.seed);
  std::vector<DecisionTree> forest(static_cast<std::size_t>(config.trees));
  std::vector<int> bootstrap(static_cast<std::size_t>(n));
  for (DecisionTree& tree : forest) {
    for (int& idx : bootstrap) {
      idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    }
    tree.fit(train_x, y_train, static_cast<int>(classes.size()), bootstrap, mtry,
             config.min_samples_leaf, rng);
  }

  int correct = 0;
  std::vector<int> votes(classes.size());
  for (Eigen::Index r = 0; r < test_x.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const DecisionTree& tree : forest) {
      ++votes[static_cast<std::size_t>(tree.predict(test_x.row(r)))];
    }
    const int pred = static_cast<int>(
        std::max_element(votes.begin(), votes.end()) - votes.begin());
    auto it = classes.find(test_labels[static_cast<std::size_t>(r)]);
    if (it != classes.end() && it->second == pred) ++correct;
  }
  return test_x.rows() == 0 ? 0.0
                            : static_cast<double>(correct) / static_cast<double>(test_x.rows());
}

}  // namespace gctm
