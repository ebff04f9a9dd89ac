#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gctm/graphs.hpp"
#include "gctm/nn.hpp"

namespace gctm {

enum class AugmentMode { kGcn, kEdgePerturb };
enum class Activation { kIdentity, kRelu };

std::string to_string(AugmentMode m);
AugmentMode augment_mode_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Stacked GCN weights for one polarity: layer l maps dim_l -> dim_{l+1} with
// dim_0 = v and dim_L = k. The identity input feature matrix is folded into
// layer 0, which computes rho(A~ W0) directly.
struct GcnStack {
  Polarity polarity = Polarity::kPositive;
  std::vector<nn::Parameter> weights;
  Activation final_activation = Activation::kIdentity;

  int layer_count() const { return static_cast<int>(weights.size()); }

  static GcnStack init(Polarity polarity, int vocab, int topics, int layers,
                       int hidden_dim, Activation final_activation, Rng& rng);
};

// One contrastive training example: the enriched prototype feature plus the
// generated positive/negative representations (length k in gcn mode, length v
// in edge_perturb mode).
struct SampleTriple {
  std::string doc_id;
  Eigen::VectorXd prototype_feature;  // length 2v
  Eigen::VectorXd positive_repr;
  Eigen::VectorXd negative_repr;
  AugmentMode mode = AugmentMode::kGcn;
};

// L applications of A~ H W with rectifiers between layers; output is v x k
// and differentiable with respect to every stack weight.
nn::Tape::NodeId gcn_forward(nn::Tape& tape, std::shared_ptr<const nn::SpMat> norm_adj,
                             GcnStack& stack);

// Per-word softmax over the k topic dimension; rows sum to one.
nn::Tape::NodeId word_topic_distributions(nn::Tape& tape, nn::Tape::NodeId hidden);
nn::Matrix word_topic_distributions_value(const nn::Matrix& hidden);

// Document-word information propagation: H_d = A_d * beta for a batch of
// DWBG rows (B x v) against word-topic distributions (v x k).
nn::Tape::NodeId dwip(nn::Tape& tape, std::shared_ptr<const nn::SpMat> dwbg_rows,
                      nn::Tape::NodeId word_topics);
Eigen::VectorXd dwip_value(const Eigen::SparseVector<double>& doc_row,
                           const nn::Matrix& word_topics);

// Edge perturbation of the DWBG: x_d = A_d * A~ in feature space (length v),
// parameter-free. Positive graphs reinforce existing edges and add edges to
// neighbours of mentioned words; negative graphs connect only to "fake"
// neighbours.
Eigen::VectorXd edge_perturbation(const Eigen::SparseVector<double>& doc_row,
                                  const nn::SpMatRow& norm_adj);
// All corpus rows at once (N x v result kept sparse).
nn::SpMatRow edge_perturbation_all(const nn::SpMatRow& dwbg, const nn::SpMatRow& norm_adj);

struct SampleTripleInputs {
  const SparseMatrix* tfidf = nullptr;            // N x v DWBG weights
  const std::vector<std::string>* doc_ids = nullptr;  // row -> doc id
  const WordGraph* graph_pos = nullptr;
  const WordGraph* graph_neg = nullptr;
  const DocEmbeddingTable* embeddings = nullptr;  // enables the contextual channel
};

class ContextProjection;  // defined in ntm.hpp

// Deterministic evaluation-mode triple generation for the given document rows.
// Throws CoverageError when the contextual channel is enabled and a document
// has no embedding.
std::vector<SampleTriple> make_sample_triples(const SampleTripleInputs& inputs,
                                              const std::vector<int>& rows,
                                              AugmentMode mode, GcnStack& gcn_pos,
                                              GcnStack& gcn_neg,
                                              const ContextProjection* context);

}  // namespace gctm
