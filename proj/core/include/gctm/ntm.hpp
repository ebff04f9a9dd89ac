#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gctm/augment.hpp"
#include "gctm/nn.hpp"

namespace gctm {

enum class ReconTarget { kTfidf, kBow };
enum class AblationMode { kFull, kNoCl, kNoNeg, kNoPos };

std::string to_string(ReconTarget t);
ReconTarget recon_target_from_string(const std::string& s);
std::string to_string(AblationMode m);
AblationMode ablation_from_string(const std::string& s);

enum class InputKind { kPrototype, kAugmented };

struct ModelDims {
  int vocab = 0;          // v
  int topics = 0;         // k
  int hidden = 300;       // encoder trunk width
  int gcn_hidden = 100;   // intermediate GCN width (layers >= 2)
  int gcn_layers = 2;     // L
  int embedding_dim = 0;  // contextual embedding size; 0 disables the channel
};

// Shared inference network: one softplus trunk over the enriched 2v input,
// two linear heads, and an affine adapter that lifts length-k augmented
// representations to the trunk's hidden width (gcn mode). The trunk weight
// is stored as two v x h blocks (bag-of-words half, contextual half) so the
// training path can feed the sparse TF-IDF block without densifying the
// enriched input.
struct EncoderParams {
  nn::Parameter trunk_bow_w, trunk_ctx_w, trunk_b;
  nn::Parameter mu_w, mu_b;
  nn::Parameter logvar_w, logvar_b;
  nn::Parameter adapter_w, adapter_b;
};

struct DecoderParams {
  nn::Parameter topic_word;  // beta, k x v
  nn::Parameter background;  // 1 x v log-frequency offset
  bool has_background = false;
};

// Feed-forward projection of the contextual document embedding to length v.
struct ContextProjection {
  nn::Parameter w, b;  // e x v, 1 x v
  bool enabled = false;
};

struct TopicRepr {
  Eigen::VectorXd theta;  // on the probability simplex
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

struct ModelParams {
  ModelDims dims;
  AugmentMode mode = AugmentMode::kGcn;
  EncoderParams encoder;
  DecoderParams decoder;
  GcnStack gcn_pos, gcn_neg;
  ContextProjection context;

  static ModelParams init(const ModelDims& dims, AugmentMode mode, bool background,
                          Activation gcn_final_activation, std::uint64_t seed);

  // Every trainable tensor, in a fixed registration order.
  std::vector<nn::Parameter*> parameters();

  // Versioned binary container: named tensors plus config hash and seed.
  void save_checkpoint(const std::string& path, std::uint64_t config_hash,
                       std::uint64_t seed) const;
  static ModelParams load_checkpoint(const std::string& path,
                                     std::uint64_t* config_hash_out = nullptr,
                                     std::uint64_t* seed_out = nullptr);
};

// --- Tape-level operations ---------------------------------------------------

struct EncodeResult {
  nn::Tape::NodeId mu;
  nn::Tape::NodeId logvar;  // clamped to [-10, 10]
  nn::Tape::NodeId sigma;   // exp(0.5 logvar)
};

// kPrototype expects rows of length 2v through the trunk; kAugmented expects
// rows of length k through the adapter (gcn mode). edge_perturb-mode augmented
// inputs are zero-padded to 2v by the caller and encoded as prototypes.
EncodeResult encode(nn::Tape& tape, nn::Tape::NodeId input, ModelParams& params,
                    InputKind kind);

// theta = softmax(mu + sigma .* eps); eval mode passes eps = 0.
nn::Tape::NodeId reparameterize(nn::Tape& tape, const EncodeResult& enc,
                                const nn::Matrix& eps);

// Row-wise log softmax of theta * beta (+ background when enabled).
nn::Tape::NodeId decode(nn::Tape& tape, nn::Tape::NodeId theta, ModelParams& params);

// Batch-mean ELBO loss: closed-form KL(N(mu, diag sigma^2) || N(0, I)) minus
// the reconstruction term sum_i x_i log p_i.
nn::Tape::NodeId elbo_loss(nn::Tape& tape, const nn::Matrix& recon_target,
                           nn::Tape::NodeId recon_logprob, const EncodeResult& enc);

// Batch-mean contrastive loss
//   -log exp(theta . theta+) / (exp(theta . theta+) + alpha exp(theta . theta-)).
nn::Tape::NodeId contrastive_loss(nn::Tape& tape, nn::Tape::NodeId theta,
                                  nn::Tape::NodeId theta_pos, nn::Tape::NodeId theta_neg,
                                  double alpha);

nn::Tape::NodeId total_loss(nn::Tape& tape, nn::Tape::NodeId elbo, nn::Tape::NodeId cl,
                            double gamma);

// --- Joint batch forward ------------------------------------------------------

struct BatchInputs {
  // B x v DWBG rows (TF-IDF weights) for the batch documents.
  std::shared_ptr<const nn::SpMat> dwbg_rows;
  nn::Matrix recon_target;  // B x v
  nn::Matrix embeddings;    // B x e, empty when the contextual channel is off
  nn::Matrix eps, eps_pos, eps_neg;  // B x k; zeros in evaluation mode
  // gcn mode: normalized word-graph adjacencies.
  std::shared_ptr<const nn::SpMat> adj_pos, adj_neg;
  // edge_perturb mode: precomputed perturbed features for the batch.
  nn::Matrix x_pos, x_neg;  // B x v
};

struct BatchOutputs {
  nn::Tape::NodeId theta = -1;
  nn::Tape::NodeId theta_pos = -1;
  nn::Tape::NodeId theta_neg = -1;
  nn::Tape::NodeId s_pos = -1;  // B x 1 dot products theta . theta+
  nn::Tape::NodeId s_neg = -1;
  nn::Tape::NodeId elbo = -1;
  // Contrastive term under the active ablation (so total = elbo + gamma * cl
  // always holds); -1 only for kNoCl.
  nn::Tape::NodeId cl = -1;
  nn::Tape::NodeId total = -1;
  double elbo_value = 0.0;
  double cl_value = 0.0;
  double total_value = 0.0;
};

// Builds the full differentiable loss for one batch under the given ablation:
//   kFull  : elbo + gamma * cl
//   kNoCl  : elbo
//   kNoNeg : elbo - gamma * mean(theta . theta+)
//   kNoPos : elbo + gamma * mean(theta . theta-)
BatchOutputs forward_batch(nn::Tape& tape, ModelParams& params, const BatchInputs& in,
                           AblationMode ablation, double alpha, double gamma);

// Deterministic evaluation-mode document representations (eps = 0): one
// simplex row per input row.
nn::Matrix infer_theta(ModelParams& params, const nn::SpMat& dwbg_rows,
                       const nn::Matrix& embeddings);

// Same pass, with the mu/sigma diagnostics attached.
std::vector<TopicRepr> infer_topic_reprs(ModelParams& params, const nn::SpMat& dwbg_rows,
                                         const nn::Matrix& embeddings);

}  // namespace gctm
