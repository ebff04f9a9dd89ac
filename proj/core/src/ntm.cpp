#include "gctm/ntm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gctm/error.hpp"

namespace gctm {

std::string to_string(ReconTarget t) { return t == ReconTarget::kTfidf ? "tfidf" : "bow"; }

ReconTarget recon_target_from_string(const std::string& s) {
  if (s == "tfidf") return ReconTarget::kTfidf;
  if (s == "bow") return ReconTarget::kBow;
  throw ConfigError("unknown reconstruction target: " + s);
}

std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::kFull: return "full";
    case AblationMode::kNoCl: return "no_cl";
    case AblationMode::kNoNeg: return "no_neg";
    case AblationMode::kNoPos: return "no_pos";
  }
  return "?";
}

AblationMode ablation_from_string(const std::string& s) {
  if (s == "full") return AblationMode::kFull;
  if (s == "no_cl") return AblationMode::kNoCl;
  if (s == "no_neg") return AblationMode::kNoNeg;
  if (s == "no_pos") return AblationMode::kNoPos;
  throw ConfigError("unknown ablation mode: " + s);
}

ModelParams ModelParams::init(const ModelDims& dims, AugmentMode mode, bool background,
                              Activation gcn_final_activation, std::uint64_t seed) {
  if (dims.vocab <= 0 || dims.topics <= 1 || dims.hidden <= 0) {
    throw ConfigError("model dims require vocab > 0, topics > 1, hidden > 0");
  }
  Rng rng(seed);
  ModelParams p;
  p.dims = dims;
  p.mode = mode;

  const int v = dims.vocab, k = dims.topics, h = dims.hidden;
  // Two blocks of one logical 2v x h trunk weight; scaled by the full fan-in.
  const double trunk_bound = std::sqrt(6.0 / static_cast<double>(2 * v + h));
  p.encoder.trunk_bow_w = {"encoder.trunk_bow_w", nn::uniform_init(v, h, trunk_bound, rng)};
  p.encoder.trunk_ctx_w = {"encoder.trunk_ctx_w", nn::uniform_init(v, h, trunk_bound, rng)};
  p.encoder.trunk_b = {"encoder.trunk_b", nn::Matrix::Zero(1, h)};
  p.encoder.mu_w = {"encoder.mu_w", nn::glorot_uniform(h, k, rng)};
  p.encoder.mu_b = {"encoder.mu_b", nn::Matrix::Zero(1, k)};
  p.encoder.logvar_w = {"encoder.logvar_w", nn::glorot_uniform(h, k, rng)};
  p.encoder.logvar_b = {"encoder.logvar_b", nn::Matrix::Zero(1, k)};
  p.encoder.adapter_w = {"encoder.adapter_w", nn::glorot_uniform(k, h, rng)};
  p.encoder.adapter_b = {"encoder.adapter_b", nn::Matrix::Zero(1, h)};

  p.decoder.topic_word = {"decoder.beta", nn::glorot_uniform(k, v, rng)};
  p.decoder.has_background = background;
  if (background) {
    p.decoder.background = {"decoder.background", nn::Matrix::Zero(1, v)};
  }

  p.gcn_pos = GcnStack::init(Polarity::kPositive, v, k, dims.gcn_layers, dims.gcn_hidden,
                             gcn_final_activation, rng);
  p.gcn_neg = GcnStack::init(Polarity::kNegative, v, k, dims.gcn_layers, dims.gcn_hidden,
                             gcn_final_activation, rng);

  p.context.enabled = dims.embedding_dim > 0;
  if (p.context.enabled) {
    p.context.w = {"context.w", nn::glorot_uniform(dims.embedding_dim, v, rng)};
    p.context.b = {"context.b", nn::Matrix::Zero(1, v)};
  }
  return p;
}

std::vector<nn::Parameter*> ModelParams::parameters() {
  std::vector<nn::Parameter*> out = {
      &encoder.trunk_bow_w, &encoder.trunk_ctx_w, &encoder.trunk_b,
      &encoder.mu_w,        &encoder.mu_b,        &encoder.logvar_w,
      &encoder.logvar_b,    &decoder.topic_word,
  };
  if (decoder.has_background) out.push_back(&decoder.background);
  if (mode == AugmentMode::kGcn) {
    out.push_back(&encoder.adapter_w);
    out.push_back(&encoder.adapter_b);
    for (nn::Parameter& w : gcn_pos.weights) out.push_back(&w);
    for (nn::Parameter& w : gcn_neg.weights) out.push_back(&w);
  }
  if (context.enabled) {
    out.push_back(&context.w);
    out.push_back(&context.b);
  }
  return out;
}

// --- operations ---------------------------------------------------------------

namespace {

EncodeResult heads_from_hidden(nn::Tape& tape, nn::Tape::NodeId hidden,
                               ModelParams& params) {
  EncodeResult r;
  r.mu = tape.add_rowvec(tape.matmul(hidden, tape.parameter(params.encoder.mu_w)),
                         tape.parameter(params.encoder.mu_b));
  r.logvar = tape.clamp(
      tape.add_rowvec(tape.matmul(hidden, tape.parameter(params.encoder.logvar_w)),
                      tape.parameter(params.encoder.logvar_b)),
      -10.0, 10.0);
  r.sigma = tape.exp(tape.scale(r.logvar, 0.5));
  if (!tape.value(r.mu).allFinite() || !tape.value(r.logvar).allFinite()) {
    throw NumericError("non-finite encoder activations (batch of " +
                       std::to_string(tape.value(r.mu).rows()) + " rows)");
  }
  return r;
}

// Trunk pass fed directly from the two prototype halves: a bag-of-words block
// (sparse rows or a dense node) and an optional contextual block (-1 when the
// channel is off). Equivalent to encode() on the concatenated 2v input but
// never materializes the zeros of the sparse half.
EncodeResult encode_prototype_parts(nn::Tape& tape, ModelParams& params,
                                    std::shared_ptr<const nn::SpMat> bow_rows,
                                    nn::Tape::NodeId bow_dense, nn::Tape::NodeId ctx) {
  nn::Tape::NodeId pre =
      bow_rows != nullptr
          ? tape.spmm(std::move(bow_rows), tape.parameter(params.encoder.trunk_bow_w))
          : tape.matmul(bow_dense, tape.parameter(params.encoder.trunk_bow_w));
  if (ctx >= 0) {
    pre = tape.add(pre, tape.matmul(ctx, tape.parameter(params.encoder.trunk_ctx_w)));
  }
  nn::Tape::NodeId hidden =
      tape.softplus(tape.add_rowvec(pre, tape.parameter(params.encoder.trunk_b)));
  return heads_from_hidden(tape, hidden, params);
}

}  // namespace

EncodeResult encode(nn::Tape& tape, nn::Tape::NodeId input, ModelParams& params,
                    InputKind kind) {
  if (kind == InputKind::kPrototype) {
    const int v = params.dims.vocab;
    if (tape.value(input).cols() != 2 * v) {
      throw ConfigError("prototype input must have length 2v");
    }
    return encode_prototype_parts(tape, params, nullptr, tape.cols(input, 0, v),
                                  tape.cols(input, v, v));
  }
  nn::Tape::NodeId hidden =
      tape.add_rowvec(tape.matmul(input, tape.parameter(params.encoder.adapter_w)),
                      tape.parameter(params.encoder.adapter_b));
  return heads_from_hidden(tape, hidden, params);
}

nn::Tape::NodeId reparameterize(nn::Tape& tape, const EncodeResult& enc,
                                const nn::Matrix& eps) {
  return tape.softmax_rows(tape.add(enc.mu, tape.cmul(enc.sigma, tape.constant(eps))));
}

nn::Tape::NodeId decode(nn::Tape& tape, nn::Tape::NodeId theta, ModelParams& params) {
  nn::Tape::NodeId logits = tape.matmul(theta, tape.parameter(params.decoder.topic_word));
  if (params.decoder.has_background) {
    logits = tape.add_rowvec(logits, tape.parameter(params.decoder.background));
  }
  return tape.log_softmax_rows(logits);
}

nn::Tape::NodeId elbo_loss(nn::Tape& tape, const nn::Matrix& recon_target,
                           nn::Tape::NodeId recon_logprob, const EncodeResult& enc) {
  const auto batch = static_cast<double>(recon_target.rows());
  // KL = 0.5 sum(sigma^2 + mu^2 - 1 - log sigma^2), diagonal Gaussian vs N(0, I).
  nn::Tape::NodeId sigma_sq = tape.exp(enc.logvar);
  nn::Tape::NodeId mu_sq = tape.cmul(enc.mu, enc.mu);
  nn::Tape::NodeId kl_terms =
      tape.add_scalar(tape.sub(tape.add(sigma_sq, mu_sq), enc.logvar), -1.0);
  nn::Tape::NodeId kl = tape.scale(tape.sum(kl_terms), 0.5);
  nn::Tape::NodeId recon =
      tape.scale(tape.sum(tape.cmul(tape.constant(recon_target), recon_logprob)), -1.0);
  return tape.scale(tape.add(kl, recon), 1.0 / batch);
}

nn::Tape::NodeId contrastive_loss(nn::Tape& tape, nn::Tape::NodeId theta,
                                  nn::Tape::NodeId theta_pos, nn::Tape::NodeId theta_neg,
                                  double alpha) {
  if (alpha <= 0.0) throw ConfigError("contrastive alpha must be positive");
  const auto batch = static_cast<double>(tape.value(theta).rows());
  nn::Tape::NodeId s_pos = tape.row_dot(theta, theta_pos);
  nn::Tape::NodeId s_neg = tape.row_dot(theta, theta_neg);
  // -log(e^{s+} / (e^{s+} + alpha e^{s-})) = log(e^{s+} + alpha e^{s-}) - s+.
  // theta dot products live in [0, 1], so the naive form is stable.
  nn::Tape::NodeId denom = tape.add(tape.exp(s_pos), tape.scale(tape.exp(s_neg), alpha));
  nn::Tape::NodeId per_doc = tape.sub(tape.log(denom), s_pos);
  return tape.scale(tape.sum(per_doc), 1.0 / batch);
}

nn::Tape::NodeId total_loss(nn::Tape& tape, nn::Tape::NodeId elbo, nn::Tape::NodeId cl,
                            double gamma) {
  if (gamma < 0.0) throw ConfigError("gamma must be nonnegative");
  if (cl < 0 || gamma == 0.0) return elbo;
  return tape.add(elbo, tape.scale(cl, gamma));
}

// --- joint batch forward --------------------------------------------------------

namespace {

// Augmented-sample topic representations under the configured mode.
struct SampleReprs {
  nn::Tape::NodeId theta_pos;
  nn::Tape::NodeId theta_neg;
};

SampleReprs encode_samples(nn::Tape& tape, ModelParams& params, const BatchInputs& in) {
  SampleReprs out{};
  if (params.mode == AugmentMode::kGcn) {
    nn::Tape::NodeId beta_pos =
        word_topic_distributions(tape, gcn_forward(tape, in.adj_pos, params.gcn_pos));
    nn::Tape::NodeId beta_neg =
        word_topic_distributions(tape, gcn_forward(tape, in.adj_neg, params.gcn_neg));
    nn::Tape::NodeId h_pos = dwip(tape, in.dwbg_rows, beta_pos);
    nn::Tape::NodeId h_neg = dwip(tape, in.dwbg_rows, beta_neg);
    out.theta_pos =
        reparameterize(tape, encode(tape, h_pos, params, InputKind::kAugmented), in.eps_pos);
    out.theta_neg =
        reparameterize(tape, encode(tape, h_neg, params, InputKind::kAugmented), in.eps_neg);
  } else {
    // Perturbed features go through the shared trunk with a zeroed
    // contextual channel.
    out.theta_pos = reparameterize(
        tape,
        encode_prototype_parts(tape, params, nullptr, tape.constant(in.x_pos), -1),
        in.eps_pos);
    out.theta_neg = reparameterize(
        tape,
        encode_prototype_parts(tape, params, nullptr, tape.constant(in.x_neg), -1),
        in.eps_neg);
  }
  return out;
}

}  // namespace

BatchOutputs forward_batch(nn::Tape& tape, ModelParams& params, const BatchInputs& in,
                           AblationMode ablation, double alpha, double gamma) {
  BatchOutputs out;
  const auto batch = static_cast<Eigen::Index>(in.recon_target.rows());

  // Enriched prototype: TF-IDF rows (kept sparse) concatenated with the
  // projected contextual embedding (absent when the channel is off).
  nn::Tape::NodeId ctx = -1;
  if (params.context.enabled) {
    if (in.embeddings.rows() != batch) {
      throw CoverageError("contextual mode on but batch embeddings are missing");
    }
    ctx = tape.add_rowvec(
        tape.matmul(tape.constant(in.embeddings), tape.parameter(params.context.w)),
        tape.parameter(params.context.b));
  }

  EncodeResult enc = encode_prototype_parts(tape, params, in.dwbg_rows, -1, ctx);
  out.theta = reparameterize(tape, enc, in.eps);
  nn::Tape::NodeId recon_logprob = decode(tape, out.theta, params);
  out.elbo = elbo_loss(tape, in.recon_target, recon_logprob, enc);

  if (ablation == AblationMode::kNoCl) {
    out.total = out.elbo;
  } else {
    SampleReprs samples = encode_samples(tape, params, in);
    out.theta_pos = samples.theta_pos;
    out.theta_neg = samples.theta_neg;
    out.s_pos = tape.row_dot(out.theta, out.theta_pos);
    out.s_neg = tape.row_dot(out.theta, out.theta_neg);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    if (ablation == AblationMode::kFull) {
      out.cl = contrastive_loss(tape, out.theta, out.theta_pos, out.theta_neg, alpha);
      out.total = total_loss(tape, out.elbo, out.cl, gamma);
    } else if (ablation == AblationMode::kNoNeg) {
      // L = L_NTM - (gamma/N) sum theta . theta+; the contrastive term is the
      // negated mean positive similarity.
      out.cl = tape.scale(tape.sum(out.s_pos), -inv_batch);
      out.total = tape.sub(out.elbo, tape.scale(tape.sum(out.s_pos), gamma * inv_batch));
    } else {
      // L = L_NTM + (gamma/N) sum theta . theta-.
      out.cl = tape.scale(tape.sum(out.s_neg), inv_batch);
      out.total = tape.add(out.elbo, tape.scale(tape.sum(out.s_neg), gamma * inv_batch));
    }
  }

  out.elbo_value = tape.scalar(out.elbo);
  out.cl_value = out.cl >= 0 ? tape.scalar(out.cl) : 0.0;
  out.total_value = tape.scalar(out.total);
  if (!std::isfinite(out.total_value)) {
    throw NumericError("non-finite batch loss: elbo=" + std::to_string(out.elbo_value) +
                       " cl=" + std::to_string(out.cl_value));
  }
  return out;
}

namespace {

struct InferredBatch {
  nn::Matrix theta, mu, sigma;
};

InferredBatch infer_batch(ModelParams& params, const nn::SpMat& dwbg_rows,
                          const nn::Matrix& embeddings) {
  nn::Tape tape;
  const auto batch = dwbg_rows.rows();
  nn::Tape::NodeId ctx = -1;
  if (params.context.enabled) {
    if (embeddings.rows() != batch) {
      throw CoverageError("contextual mode on but embeddings are missing for inference");
    }
    ctx = tape.add_rowvec(
        tape.matmul(tape.constant(embeddings), tape.parameter(params.context.w)),
        tape.parameter(params.context.b));
  }
  EncodeResult enc = encode_prototype_parts(
      tape, params, std::make_shared<const nn::SpMat>(dwbg_rows), -1, ctx);
  nn::Tape::NodeId theta =
      reparameterize(tape, enc, nn::Matrix::Zero(batch, params.dims.topics));
  return {tape.value(theta), tape.value(enc.mu), tape.value(enc.sigma)};
}

}  // namespace

nn::Matrix infer_theta(ModelParams& params, const nn::SpMat& dwbg_rows,
                       const nn::Matrix& embeddings) {
  return infer_batch(params, dwbg_rows, embeddings).theta;
}

std::vector<TopicRepr> infer_topic_reprs(ModelParams& params, const nn::SpMat& dwbg_rows,
                                         const nn::Matrix& embeddings) {
  const InferredBatch batch = infer_batch(params, dwbg_rows, embeddings);
  std::vector<TopicRepr> out;
  out.reserve(static_cast<std::size_t>(batch.theta.rows()));
  for (Eigen::Index r = 0; r < batch.theta.rows(); ++r) {
    TopicRepr repr;
    repr.theta = batch.theta.row(r).transpose();
    repr.mu = batch.mu.row(r).transpose();
    repr.sigma = batch.sigma.row(r).transpose();
    out.push_back(std::move(repr));
  }
  return out;
}

// --- checkpoint io ----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'C', 'T', 'M', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& out, std::uint32_t x) {
  out.write(reinterpret_cast<const char*>(&x), sizeof(x));
}
void write_u64(std::ostream& out, std::uint64_t x) {
  out.write(reinterpret_cast<const char*>(&x), sizeof(x));
}
std::uint32_t read_u32(std::istream& in) {
  std::uint32_t x = 0;
  in.read(reinterpret_cast<char*>(&x), sizeof(x));
  return x;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t x = 0;
  in.read(reinterpret_cast<char*>(&x), sizeof(x));
  return x;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

void write_tensor(std::ostream& out, const nn::Parameter& p) {
  write_string(out, p.name);
  write_u32(out, static_cast<std::uint32_t>(p.value.rows()));
  write_u32(out, static_cast<std::uint32_t>(p.value.cols()));
  for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      const double x = p.value(r, c);
      out.write(reinterpret_cast<const char*>(&x), sizeof(x));
    }
  }
}

}  // namespace

void ModelParams::save_checkpoint(const std::string& path, std::uint64_t config_hash,
                                  std::uint64_t seed) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, config_hash);
  write_u64(out, seed);
  write_u32(out, static_cast<std::uint32_t>(dims.vocab));
  write_u32(out, static_cast<std::uint32_t>(dims.topics));
  write_u32(out, static_cast<std::uint32_t>(dims.hidden));
  write_u32(out, static_cast<std::uint32_t>(dims.gcn_hidden));
  write_u32(out, static_cast<std::uint32_t>(dims.gcn_layers));
  write_u32(out, static_cast<std::uint32_t>(dims.embedding_dim));
  write_string(out, to_string(mode));
  write_u32(out, decoder.has_background ? 1u : 0u);
  write_string(out, to_string(gcn_pos.final_activation));

  auto params = const_cast<ModelParams*>(this)->parameters();
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const nn::Parameter* p : params) write_tensor(out, *p);
  if (!out) throw FormatError("checkpoint write failed: " + path);
}

ModelParams ModelParams::load_checkpoint(const std::string& path,
                                         std::uint64_t* config_hash_out,
                                         std::uint64_t* seed_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint64_t config_hash = read_u64(in);
  const std::uint64_t seed = read_u64(in);
  ModelDims dims;
  dims.vocab = static_cast<int>(read_u32(in));
  dims.topics = static_cast<int>(read_u32(in));
  dims.hidden = static_cast<int>(read_u32(in));
  dims.gcn_hidden = static_cast<int>(read_u32(in));
  dims.gcn_layers = static_cast<int>(read_u32(in));
  dims.embedding_dim = static_cast<int>(read_u32(in));
  const AugmentMode mode = augment_mode_from_string(read_string(in));
  const bool background = read_u32(in) != 0;
  const Activation final_act = activation_from_string(read_string(in));

  ModelParams params = init(dims, mode, background, final_act, seed);
  auto slots = params.parameters();
  const std::uint32_t count = read_u32(in);
  if (count != slots.size()) {
    throw FormatError("checkpoint tensor count mismatch in " + path + ": expected " +
                      std::to_string(slots.size()) + ", found " + std::to_string(count));
  }
  for (nn::Parameter* p : slots) {
    const std::string name = read_string(in);
    if (name != p->name) {
      throw FormatError("checkpoint tensor order mismatch: expected " + p->name +
                        ", found " + name);
    }
    const auto rows = static_cast<Eigen::Index>(read_u32(in));
    const auto cols = static_cast<Eigen::Index>(read_u32(in));
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw FormatError("checkpoint tensor shape mismatch for " + name);
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double x = 0;
        in.read(reinterpret_cast<char*>(&x), sizeof(x));
        p->value(r, c) = x;
      }
    }
  }
  if (!in) throw FormatError("truncated checkpoint: " + path);
  if (config_hash_out != nullptr) *config_hash_out = config_hash;
  if (seed_out != nullptr) *seed_out = seed;
  return params;
}

}  // namespace gctm
