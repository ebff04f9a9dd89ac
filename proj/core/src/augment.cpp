#include "gctm/augment.hpp"

#include <cmath>

#include "gctm/error.hpp"
#include "gctm/ntm.hpp"

namespace gctm {

std::string to_string(AugmentMode m) {
  return m == AugmentMode::kGcn ? "gcn" : "edge_perturb";
}

AugmentMode augment_mode_from_string(const std::string& s) {
  if (s == "gcn") return AugmentMode::kGcn;
  if (s == "edge_perturb") return AugmentMode::kEdgePerturb;
  throw ConfigError("unknown augment mode: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::kIdentity ? "identity" : "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation: " + s);
}

GcnStack GcnStack::init(Polarity polarity, int vocab, int topics, int layers,
                        int hidden_dim, Activation final_activation, Rng& rng) {
  if (layers < 1) throw ConfigError("gcn layer count must be >= 1");
  GcnStack stack;
  stack.polarity = polarity;
  stack.final_activation = final_activation;
  const std::string prefix = polarity == Polarity::kPositive ? "gcn_pos" : "gcn_neg";
  std::vector<int> dims;
  dims.push_back(vocab);
  for (int l = 1; l < layers; ++l) dims.push_back(hidden_dim);
  dims.push_back(topics);
  for (int l = 0; l < layers; ++l) {
    stack.weights.emplace_back(prefix + ".w" + std::to_string(l),
                               nn::glorot_uniform(dims[static_cast<std::size_t>(l)],
                                                  dims[static_cast<std::size_t>(l) + 1], rng));
  }
  return stack;
}

nn::Tape::NodeId gcn_forward(nn::Tape& tape, std::shared_ptr<const nn::SpMat> norm_adj,
                             GcnStack& stack) {
  const int layers = stack.layer_count();
  // Layer 0 with identity input: rho(A~ I W0) = rho(A~ W0).
  nn::Tape::NodeId h = tape.spmm(norm_adj, tape.parameter(stack.weights[0]));
  if (layers > 1) h = tape.relu(h);
  for (int l = 1; l < layers; ++l) {
    h = tape.spmm(norm_adj, tape.matmul(h, tape.parameter(stack.weights[static_cast<std::size_t>(l)])));
    if (l + 1 < layers) h = tape.relu(h);
  }
  if (stack.final_activation == Activation::kRelu) h = tape.relu(h);
  return h;
}

nn::Tape::NodeId word_topic_distributions(nn::Tape& tape, nn::Tape::NodeId hidden) {
  return tape.softmax_rows(hidden);
}

nn::Matrix word_topic_distributions_value(const nn::Matrix& hidden) {
  return nn::softmax_rows_value(hidden);
}

nn::Tape::NodeId dwip(nn::Tape& tape, std::shared_ptr<const nn::SpMat> dwbg_rows,
                      nn::Tape::NodeId word_topics) {
  return tape.spmm(std::move(dwbg_rows), word_topics);
}

Eigen::VectorXd dwip_value(const Eigen::SparseVector<double>& doc_row,
                           const nn::Matrix& word_topics) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(word_topics.cols());
  for (Eigen::SparseVector<double>::InnerIterator it(doc_row); it; ++it) {
    out += it.value() * word_topics.row(it.index()).transpose();
  }
  return out;
}

Eigen::VectorXd edge_perturbation(const Eigen::SparseVector<double>& doc_row,
                                  const nn::SpMatRow& norm_adj) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(norm_adj.cols());
  for (Eigen::SparseVector<double>::InnerIterator it(doc_row); it; ++it) {
    const double w = it.value();
    for (nn::SpMatRow::InnerIterator jt(norm_adj, it.index()); jt; ++jt) {
      out[jt.col()] += w * jt.value();
    }
  }
  return out;
}

nn::SpMatRow edge_perturbation_all(const nn::SpMatRow& dwbg, const nn::SpMatRow& norm_adj) {
  nn::SpMatRow out = dwbg * norm_adj;
  out.makeCompressed();
  return out;
}

namespace {

Eigen::VectorXd embedding_or_throw(const DocEmbeddingTable& table, const std::string& doc_id) {
  auto it = table.vectors.find(doc_id);
  if (it == table.vectors.end()) {
    throw CoverageError("no contextual embedding for doc id: " + doc_id);
  }
  return it->second;
}

}  // namespace

std::vector<SampleTriple> make_sample_triples(const SampleTripleInputs& inputs,
                                              const std::vector<int>& rows,
                                              AugmentMode mode, GcnStack& gcn_pos,
                                              GcnStack& gcn_neg,
                                              const ContextProjection* context) {
  const int v = inputs.tfidf->cols();
  const nn::SpMatRow dwbg = inputs.tfidf->to_eigen_row_major();

  // Word-topic distributions are shared across the batch; compute them once.
  nn::Matrix beta_pos, beta_neg;
  nn::SpMatRow adj_pos_rm, adj_neg_rm;
  if (mode == AugmentMode::kGcn) {
    nn::Tape tape;
    auto adj_pos = std::make_shared<const nn::SpMat>(inputs.graph_pos->normalized.to_eigen());
    auto adj_neg = std::make_shared<const nn::SpMat>(inputs.graph_neg->normalized.to_eigen());
    beta_pos = tape.value(word_topic_distributions(tape, gcn_forward(tape, adj_pos, gcn_pos)));
    beta_neg = tape.value(word_topic_distributions(tape, gcn_forward(tape, adj_neg, gcn_neg)));
  } else {
    adj_pos_rm = nn::SpMatRow(inputs.graph_pos->normalized.to_eigen());
    adj_neg_rm = nn::SpMatRow(inputs.graph_neg->normalized.to_eigen());
  }

  const bool contextual = context != nullptr && context->enabled;
  std::vector<SampleTriple> triples;
  triples.reserve(rows.size());
  for (int row : rows) {
    SampleTriple t;
    t.mode = mode;
    t.doc_id = (*inputs.doc_ids)[static_cast<std::size_t>(row)];
    const Eigen::SparseVector<double> doc_row = dwbg.row(row);

    Eigen::VectorXd enriched = Eigen::VectorXd::Zero(2 * v);
    enriched.head(v) = Eigen::VectorXd(doc_row);
    if (contextual) {
      if (inputs.embeddings == nullptr) {
        throw CoverageError("contextual channel enabled but no embedding table supplied");
      }
      const Eigen::VectorXd emb = embedding_or_throw(*inputs.embeddings, t.doc_id);
      enriched.tail(v) =
          (emb.transpose() * context->w.value + context->b.value.row(0)).transpose();
    }
    t.prototype_feature = std::move(enriched);

    if (mode == AugmentMode::kGcn) {
      t.positive_repr = dwip_value(doc_row, beta_pos);
      t.negative_repr = dwip_value(doc_row, beta_neg);
    } else {
      t.positive_repr = edge_perturbation(doc_row, adj_pos_rm);
      t.negative_repr = edge_perturbation(doc_row, adj_neg_rm);
    }
    triples.push_back(std::move(t));
  }
  return triples;
}

}  // namespace gctm
