#include "gctm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gctm/error.hpp"
#include "gctm/rng.hpp"

namespace gctm {

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig tc;
  tc.topics = cfg.get_int("model.k", tc.topics);
  tc.hidden = cfg.get_int("model.hidden", tc.hidden);
  tc.background = cfg.get_bool("model.background", tc.background);
  tc.recon_target =
      recon_target_from_string(cfg.get_string("model.recon_target", "tfidf"));
  tc.lr = cfg.get_double("train.lr", tc.lr);
  tc.epochs = cfg.get_int("train.epochs", tc.epochs);
  // Large-vocabulary corpora default to the bigger batch.
  if (!cfg.has("train.batch_size") && cfg.get_int("corpus.vocab_size", 2000) >= 10000) {
    tc.batch_size = 500;
  } else {
    tc.batch_size = cfg.get_int("train.batch_size", tc.batch_size);
  }
  tc.alpha = cfg.get_double("train.alpha", tc.alpha);
  tc.gamma = cfg.get_double("train.gamma", tc.gamma);
  tc.beta1 = cfg.get_double("train.beta1", tc.beta1);
  tc.beta2 = cfg.get_double("train.beta2", tc.beta2);
  tc.clip_norm = cfg.get_double("train.clip_norm", tc.clip_norm);
  tc.eval_every = cfg.get_int("train.eval_every", tc.eval_every);
  tc.top_words = cfg.get_int("eval.top_words", tc.top_words);
  tc.seeds = cfg.get_u64_list("train.seeds", tc.seeds);
  tc.ablation = ablation_from_string(cfg.get_string("train.ablation", "full"));
  tc.mode = augment_mode_from_string(cfg.get_string("augment.mode", "gcn"));
  tc.gcn_layers = cfg.get_int("augment.gcn_layers", tc.gcn_layers);
  tc.gcn_hidden = cfg.get_int("augment.hidden_dim", tc.gcn_hidden);
  tc.gcn_final_activation =
      activation_from_string(cfg.get_string("augment.final_activation", "identity"));
  tc.contextual = !cfg.get_string("corpus.embeddings", "").empty();
  tc.validate();
  return tc;
}

void TrainConfig::validate() const {
  if (topics <= 1) throw ConfigError("model.k must be > 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (alpha <= 0.0) throw ConfigError("train.alpha must be positive");
  if (gamma < 0.0) throw ConfigError("train.gamma must be nonnegative");
  if (lr <= 0.0) throw ConfigError("train.lr must be positive");
  if (gcn_layers < 1 || gcn_layers > 8) throw ConfigError("augment.gcn_layers out of range");
  if (seeds.empty()) throw ConfigError("train.seeds must not be empty");
}

// --- RunRecord ----------------------------------------------------------------

std::string RunRecord::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["ablation"] = to_string(ablation);
  j["elbo_trace"] = elbo_trace;
  j["cl_trace"] = cl_trace;
  j["total_trace"] = total_trace;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [epoch, npmi] : val_npmi_trace) {
    trace.push_back({{"epoch", epoch}, {"npmi", npmi}});
  }
  j["val_npmi_trace"] = trace;
  j["best_val_npmi"] = best_val_npmi;
  j["best_epoch"] = best_epoch;
  j["best_checkpoint_path"] = best_checkpoint_path;
  j["final_total_loss"] = final_total_loss;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

RunRecord RunRecord::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ablation = ablation_from_string(j.at("ablation").get<std::string>());
  r.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
  r.cl_trace = j.at("cl_trace").get<std::vector<double>>();
  r.total_trace = j.at("total_trace").get<std::vector<double>>();
  for (const auto& item : j.at("val_npmi_trace")) {
    r.val_npmi_trace.emplace_back(item.at("epoch").get<int>(), item.at("npmi").get<double>());
  }
  r.best_val_npmi = j.at("best_val_npmi").get<double>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_checkpoint_path = j.at("best_checkpoint_path").get<std::string>();
  r.final_total_loss = j.at("final_total_loss").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

void RunRecord::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << to_json() << '\n';
}

RunRecord RunRecord::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

// --- training loop --------------------------------------------------------------

namespace {

struct BatchBuilder {
  const TrainArtifacts& artifacts;
  const TrainConfig& config;
  nn::SpMatRow dwbg;          // N x v TF-IDF rows
  nn::SpMatRow recon_rows;    // reconstruction targets
  nn::SpMatRow x_pos, x_neg;  // edge_perturb features (that mode only)
  std::shared_ptr<const nn::SpMat> adj_pos, adj_neg;
  const DocEmbeddingTable* embeddings = nullptr;

  BatchBuilder(const TrainArtifacts& a, const TrainConfig& c)
      : artifacts(a), config(c), dwbg(a.tfidf->to_eigen_row_major()) {
    if (c.recon_target == ReconTarget::kBow) {
      if (a.bow == nullptr) throw ConfigError("bow reconstruction target needs bow artifact");
      recon_rows = a.bow->to_eigen_row_major();
    } else {
      recon_rows = dwbg;
    }
    if (c.mode == AugmentMode::kGcn) {
      adj_pos = std::make_shared<const nn::SpMat>(a.graph_pos->normalized.to_eigen());
      adj_neg = std::make_shared<const nn::SpMat>(a.graph_neg->normalized.to_eigen());
    } else {
      const nn::SpMatRow ap(a.graph_pos->normalized.to_eigen());
      const nn::SpMatRow an(a.graph_neg->normalized.to_eigen());
      x_pos = edge_perturbation_all(dwbg, ap);
      x_neg = edge_perturbation_all(dwbg, an);
    }
    if (c.contextual) {
      if (a.embeddings == nullptr) {
        throw CoverageError("contextual mode on but no embedding table supplied");
      }
      embeddings = a.embeddings;
    }
  }

  BatchInputs make(const std::vector<int>& rows, Rng* noise, int topics) const {
    BatchInputs in;
    const auto b = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index v = dwbg.cols();

    auto slice = [&](const nn::SpMatRow& source) {
      std::vector<Eigen::Triplet<double>> trips;
      for (Eigen::Index i = 0; i < b; ++i) {
        for (nn::SpMatRow::InnerIterator it(source, rows[static_cast<std::size_t>(i)]); it; ++it) {
          trips.emplace_back(i, it.col(), it.value());
        }
      }
      nn::SpMat m(b, v);
      m.setFromTriplets(trips.begin(), trips.end());
      return m;
    };

    in.dwbg_rows = std::make_shared<const nn::SpMat>(slice(dwbg));
    in.recon_target = nn::Matrix(slice(recon_rows));
    in.adj_pos = adj_pos;
    in.adj_neg = adj_neg;
    if (config.mode == AugmentMode::kEdgePerturb) {
      in.x_pos = nn::Matrix(slice(x_pos));
      in.x_neg = nn::Matrix(slice(x_neg));
    }
    if (embeddings != nullptr) {
      in.embeddings.resize(b, embeddings->dim);
      for (Eigen::Index i = 0; i < b; ++i) {
        const std::string& id =
            artifacts.corpus->documents[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])].id;
        auto it = embeddings->vectors.find(id);
        if (it == embeddings->vectors.end()) {
          throw CoverageError("no contextual embedding for doc id: " + id);
        }
        in.embeddings.row(i) = it->second.transpose();
      }
    }

    auto draw = [&](nn::Matrix& m) {
      m.resize(b, topics);
      if (noise == nullptr) {
        m.setZero();
      } else {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = noise->normal();
        }
      }
    };
    draw(in.eps);
    draw(in.eps_pos);
    draw(in.eps_neg);
    return in;
  }
};

double validation_npmi(ModelParams& model, const TrainArtifacts& artifacts,
                       const CoherenceReference& val_ref, int top_words) {
  const TopicList topics =
      extract_topics(model.decoder, artifacts.corpus->vocabulary, top_words);
  return topic_coherence_npmi(topics, val_ref).mean;
}

}  // namespace

TrainResult train(const TrainArtifacts& artifacts, const TrainConfig& config,
                  std::uint64_t seed, const std::string& checkpoint_dir,
                  std::uint64_t config_hash) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (artifacts.corpus == nullptr || artifacts.tfidf == nullptr ||
      artifacts.graph_pos == nullptr || artifacts.graph_neg == nullptr) {
    throw ConfigError("train requires corpus, tfidf and both word graphs");
  }
  const int v = artifacts.corpus->vocabulary.size();
  if (artifacts.tfidf->cols() != v || artifacts.graph_pos->adjacency.rows() != v ||
      artifacts.graph_neg->adjacency.rows() != v) {
    throw ConfigError("artifact dimensions disagree with vocabulary size " +
                      std::to_string(v));
  }

  ModelDims dims;
  dims.vocab = v;
  dims.topics = config.topics;
  dims.hidden = config.hidden;
  dims.gcn_hidden = config.gcn_hidden;
  dims.gcn_layers = config.gcn_layers;
  dims.embedding_dim =
      (config.contextual && artifacts.embeddings != nullptr) ? artifacts.embeddings->dim : 0;

  ModelParams model = ModelParams::init(dims, config.mode, config.background,
                                        config.gcn_final_activation, seed);
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  adam_cfg.beta1 = config.beta1;
  adam_cfg.beta2 = config.beta2;
  adam_cfg.clip_norm = config.clip_norm;
  nn::Adam optimizer(model.parameters(), adam_cfg);

  BatchBuilder builder(artifacts, config);

  // Empty documents stay in the corpus but never enter a batch.
  std::vector<int> train_rows;
  for (int row : artifacts.corpus->doc_indices(Split::kTrain)) {
    if (!artifacts.corpus->token_ids[static_cast<std::size_t>(row)].empty()) {
      train_rows.push_back(row);
    }
  }
  if (train_rows.empty()) throw ConfigError("training split has no non-empty documents");

  const CoherenceReference val_ref(*artifacts.corpus, Split::kValidation);
  Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ull);
  Rng noise_rng(seed ^ 0xd1b54a32d192ed03ull);

  RunRecord record;
  record.seed = seed;
  record.ablation = config.ablation;

  ModelParams best_model = model;
  record.best_val_npmi = -2.0;

  const std::string ckpt_path =
      checkpoint_dir.empty()
          ? std::string{}
          : (std::filesystem::path(checkpoint_dir) /
             ("ckpt_" + to_string(config.ablation) + "_seed" + std::to_string(seed) + ".bin"))
                .string();

  auto consider_best = [&](int epoch) {
    const double npmi = validation_npmi(model, artifacts, val_ref, config.top_words);
    record.val_npmi_trace.emplace_back(epoch, npmi);
    if (npmi > record.best_val_npmi) {
      record.best_val_npmi = npmi;
      record.best_epoch = epoch;
      best_model = model;
    }
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(train_rows);
    double epoch_elbo = 0.0, epoch_cl = 0.0, epoch_total = 0.0;
    int batches = 0;
    for (std::size_t offset = 0; offset < train_rows.size();
         offset += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(offset + static_cast<std::size_t>(config.batch_size), train_rows.size());
      const std::vector<int> rows(train_rows.begin() + static_cast<std::ptrdiff_t>(offset),
                                  train_rows.begin() + static_cast<std::ptrdiff_t>(end));
      BatchInputs inputs = builder.make(rows, &noise_rng, config.topics);
      nn::Tape tape;
      BatchOutputs out;
      try {
        out = forward_batch(tape, model, inputs, config.ablation, config.alpha, config.gamma);
      } catch (const NumericError& err) {
        // Abort with the last good checkpoint still available to callers.
        if (!ckpt_path.empty()) {
          best_model.save_checkpoint(ckpt_path, config_hash, seed);
        }
        throw NumericError(std::string(err.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches) + ")");
      }
      tape.backward(out.total);
      optimizer.step();
      epoch_elbo += out.elbo_value;
      epoch_cl += out.cl_value;
      epoch_total += out.total_value;
      ++batches;
    }
    record.elbo_trace.push_back(epoch_elbo / batches);
    record.cl_trace.push_back(epoch_cl / batches);
    record.total_trace.push_back(epoch_total / batches);
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      consider_best(epoch);
    }
  }

  record.final_total_loss = record.total_trace.back();
  if (!ckpt_path.empty()) {
    std::filesystem::create_directories(checkpoint_dir);
    best_model.save_checkpoint(ckpt_path, config_hash, seed);
    record.best_checkpoint_path = ckpt_path;
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(best_model), std::move(record)};
}

AggregateStat aggregate(std::vector<double> values) {
  AggregateStat stat;
  stat.per_seed = values;
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double x : values) sum += x;
  stat.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double x : values) sq += (x - stat.mean) * (x - stat.mean);
  stat.stddev = values.size() > 1
                    ? std::sqrt(sq / static_cast<double>(values.size() - 1))
                    : 0.0;
  return stat;
}

MultiSeedResult run_multi_seed(const TrainArtifacts& artifacts, const TrainConfig& config,
                               const std::string& checkpoint_dir,
                               std::uint64_t config_hash) {
  MultiSeedResult result;
  std::vector<std::uint64_t> seeds = config.seeds;
  std::sort(seeds.begin(), seeds.end());
  bool numeric_failure = false;
  for (std::uint64_t seed : seeds) {
    try {
      result.records.push_back(
          train(artifacts, config, seed, checkpoint_dir, config_hash).record);
    } catch (const NumericError& err) {
      numeric_failure = true;
      result.failures.emplace_back(seed, err.what());
    } catch (const Error& err) {
      result.failures.emplace_back(seed, err.what());
    }
  }
  if (result.records.empty()) {
    std::string detail;
    for (const auto& [seed, reason] : result.failures) {
      detail += " seed " + std::to_string(seed) + ": " + reason + ";";
    }
    if (numeric_failure) throw NumericError("all seeds failed:" + detail);
    throw Error("all seeds failed:" + detail);
  }
  std::vector<double> npmis;
  for (const RunRecord& r : result.records) npmis.push_back(r.best_val_npmi);
  result.val_npmi = aggregate(std::move(npmis));
  return result;
}

std::map<AblationMode, MultiSeedResult> ablate(const TrainArtifacts& artifacts,
                                               const TrainConfig& config,
                                               const std::string& checkpoint_dir,
                                               std::uint64_t config_hash) {
  std::map<AblationMode, MultiSeedResult> out;
  for (AblationMode mode : {AblationMode::kFull, AblationMode::kNoCl, AblationMode::kNoNeg,
                            AblationMode::kNoPos}) {
    TrainConfig variant = config;
    variant.ablation = mode;
    out.emplace(mode, run_multi_seed(artifacts, variant, checkpoint_dir, config_hash));
  }
  return out;
}

}  // namespace gctm
