#include "gctm/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gctm/error.hpp"

namespace gctm {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t x) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << x;
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

TrainArtifacts TrainArtifactsBundle::view() const {
  TrainArtifacts a;
  a.corpus = &corpus;
  a.tfidf = &tfidf;
  a.bow = &bow;
  a.graph_pos = &graph_pos;
  a.graph_neg = &graph_neg;
  a.embeddings = embeddings.has_value() ? &*embeddings : nullptr;
  return a;
}

Pipeline::Pipeline(Config config, std::string root_dir)
    : config_(std::move(config)), root_(std::move(root_dir)) {
  fs::create_directories(root_);
}

std::string Pipeline::preprocess_dir() const { return (fs::path(root_) / "preprocess").string(); }
std::string Pipeline::graphs_dir() const { return (fs::path(root_) / "graphs").string(); }
std::string Pipeline::train_dir() const { return (fs::path(root_) / "train").string(); }
std::string Pipeline::ablate_dir() const { return (fs::path(root_) / "ablate").string(); }
std::string Pipeline::eval_dir() const { return (fs::path(root_) / "eval").string(); }
std::string Pipeline::report_dir() const { return (fs::path(root_) / "report").string(); }

// --- hashes -------------------------------------------------------------------

std::uint64_t Pipeline::preprocess_hash() const {
  std::string basis = config_.canonical_string({"corpus.", "split."});
  basis += "stopwords_v1\n";
  basis += "raw:" + hex64(hash_file_contents(config_.require_string("corpus.path"))) + "\n";
  const std::string emb = config_.get_string("corpus.embeddings", "");
  if (!emb.empty()) basis += "emb:" + hex64(hash_file_contents(emb)) + "\n";
  return fnv1a64(basis);
}

std::uint64_t Pipeline::graphs_hash() const {
  return fnv1a64("up:" + hex64(preprocess_hash()) + "\n" +
                 config_.canonical_string({"graphs."}));
}

std::uint64_t Pipeline::train_hash() const {
  return fnv1a64("up:" + hex64(graphs_hash()) + "\n" +
                 config_.canonical_string({"model.", "train.", "augment."}));
}

std::uint64_t Pipeline::ablate_hash() const {
  return fnv1a64("ablate-up:" + hex64(graphs_hash()) + "\n" +
                 config_.canonical_string({"model.", "train.", "augment."}));
}

std::uint64_t Pipeline::eval_hash() const {
  return fnv1a64("up:" + hex64(train_hash()) + "\n" + config_.canonical_string({"eval."}));
}

void Pipeline::require_fresh(const std::string& stage, std::uint64_t expected_hash) const {
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (!manifest.fresh(root_, stage, expected_hash)) {
    throw StaleArtifactError("stage '" + stage +
                             "' is missing or stale; rerun it before this stage");
  }
}

// --- preprocess -----------------------------------------------------------------

bool Pipeline::run_preprocess() {
  const std::uint64_t hash = preprocess_hash();
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (manifest.fresh(root_, "preprocess", hash)) return true;

  const std::string raw_path = config_.require_string("corpus.path");
  const std::vector<RawDocument> raw = load_jsonl_corpus(raw_path);
  if (raw.empty()) throw FormatError("corpus file has no documents: " + raw_path);

  Corpus corpus = build_corpus(raw, PreprocessConfig::defaults(),
                               config_.get_int("corpus.vocab_size", 2000),
                               config_.get_double("split.train", 0.48),
                               config_.get_double("split.val", 0.12),
                               config_.get_double("split.test", 0.40),
                               config_.get_u64("split.seed", 13));
  SparseMatrix tfidf = compute_tfidf(corpus);
  SparseMatrix bow = compute_bow(corpus);
  CooccurrenceStats stats =
      count_cooccurrence(corpus, config_.get_int("corpus.window_length", 20));

  const std::string emb_path = config_.get_string("corpus.embeddings", "");
  if (!emb_path.empty()) {
    DocEmbeddingTable table = load_embeddings(emb_path);
    std::vector<std::string> ids;
    for (const auto& doc : corpus.documents) ids.push_back(doc.id);
    const auto missing = table.missing_ids(ids);
    if (!missing.empty()) {
      throw CoverageError("embeddings file misses " + std::to_string(missing.size()) +
                          " doc ids (first: " + missing.front() + ")");
    }
  }

  const fs::path dir = preprocess_dir();
  fs::create_directories(dir);
  corpus.vocabulary.save((dir / "vocab.txt").string());
  {
    std::ofstream out(dir / "corpus.tsv");
    if (!out) throw FormatError("cannot write corpus.tsv");
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
      const Document& doc = corpus.documents[i];
      out << doc.id << '\t' << to_string(corpus.split_of(doc.id)) << '\t'
          << doc.label.value_or("") << '\t';
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
        if (t != 0) out << ' ';
        out << doc.tokens[t];
      }
      out << '\n';
    }
  }
  tfidf.save_tsv((dir / "tfidf.tsv").string());
  bow.save_tsv((dir / "bow.tsv").string());
  stats.pair_counts.save_tsv((dir / "cooc_pairs.tsv").string());
  {
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t i = 0; i < stats.word_counts.size(); ++i) {
      if (stats.word_counts[i] != 0) {
        entries.push_back({static_cast<int>(i), 0, static_cast<double>(stats.word_counts[i])});
      }
    }
    SparseMatrix::from_triplets(static_cast<int>(stats.word_counts.size()), 1,
                                std::move(entries))
        .save_tsv((dir / "word_counts.tsv").string());
  }
  write_text(dir / "cooc_meta.json",
             nlohmann::json{{"window_length", stats.window_length},
                            {"total_windows", stats.total_windows}}
                 .dump(2) +
                 "\n");

  StageEntry entry;
  entry.stage = "preprocess";
  entry.hash = hash;
  entry.outputs = {"preprocess/vocab.txt",      "preprocess/corpus.tsv",
                   "preprocess/tfidf.tsv",      "preprocess/bow.tsv",
                   "preprocess/cooc_pairs.tsv", "preprocess/word_counts.tsv",
                   "preprocess/cooc_meta.json"};
  entry.config_snapshot = config_.canonical_string({"corpus.", "split."});
  manifest.record(std::move(entry));
  manifest.save(root_);
  return false;
}

Corpus Pipeline::load_corpus() const {
  const fs::path dir = preprocess_dir();
  Corpus corpus;
  corpus.vocabulary = Vocabulary::load((dir / "vocab.txt").string());
  std::ifstream in(dir / "corpus.tsv");
  if (!in) throw FormatError("missing corpus.tsv; run preprocess first");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, split, label, tokens;
    std::getline(ls, id, '\t');
    std::getline(ls, split, '\t');
    std::getline(ls, label, '\t');
    std::getline(ls, tokens);
    Document doc;
    doc.id = id;
    if (!label.empty()) doc.label = label;
    std::istringstream ts(tokens);
    std::string tok;
    while (ts >> tok) doc.tokens.push_back(tok);
    corpus.splits[id] = split_from_string(split);
    corpus.documents.push_back(std::move(doc));
  }
  corpus.reindex();
  return corpus;
}

SparseMatrix Pipeline::load_tfidf() const {
  return SparseMatrix::load_tsv((fs::path(preprocess_dir()) / "tfidf.tsv").string());
}

SparseMatrix Pipeline::load_bow() const {
  return SparseMatrix::load_tsv((fs::path(preprocess_dir()) / "bow.tsv").string());
}

CooccurrenceStats Pipeline::load_cooccurrence() const {
  const fs::path dir = preprocess_dir();
  CooccurrenceStats stats;
  stats.pair_counts = SparseMatrix::load_tsv((dir / "cooc_pairs.tsv").string());
  SparseMatrix words = SparseMatrix::load_tsv((dir / "word_counts.tsv").string());
  stats.word_counts.assign(static_cast<std::size_t>(words.rows()), 0);
  for (const auto& e : words.entries()) {
    stats.word_counts[static_cast<std::size_t>(e.row)] = static_cast<std::int64_t>(e.weight);
  }
  std::ifstream meta(dir / "cooc_meta.json");
  if (!meta) throw FormatError("missing cooc_meta.json; run preprocess first");
  nlohmann::json j = nlohmann::json::parse(meta);
  stats.window_length = j.at("window_length").get<int>();
  stats.total_windows = j.at("total_windows").get<std::int64_t>();
  return stats;
}

std::optional<DocEmbeddingTable> Pipeline::load_embedding_table() const {
  const std::string path = config_.get_string("corpus.embeddings", "");
  if (path.empty()) return std::nullopt;
  return load_embeddings(path);
}

// --- graphs ---------------------------------------------------------------------

bool Pipeline::run_build_graphs() {
  const std::uint64_t hash = graphs_hash();
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (manifest.fresh(root_, "graphs", hash)) return true;
  require_fresh("preprocess", preprocess_hash());

  CooccurrenceStats stats = load_cooccurrence();
  NpmiMatrix npmi = compute_npmi(stats);
  WordGraph pos =
      build_word_graph(npmi, Polarity::kPositive, config_.get_double("graphs.mu_pos", 0.2));
  WordGraph neg =
      build_word_graph(npmi, Polarity::kNegative, config_.get_double("graphs.mu_neg", 0.2));

  const fs::path dir = graphs_dir();
  fs::create_directories(dir);
  npmi.scores.save_tsv((dir / "npmi.tsv").string());
  pos.save((dir / "wcg_positive").string());
  neg.save((dir / "wcg_negative").string());

  StageEntry entry;
  entry.stage = "graphs";
  entry.hash = hash;
  entry.outputs = {"graphs/npmi.tsv",
                   "graphs/wcg_positive_A.tsv",
                   "graphs/wcg_positive_Anorm.tsv",
                   "graphs/wcg_positive.json",
                   "graphs/wcg_negative_A.tsv",
                   "graphs/wcg_negative_Anorm.tsv",
                   "graphs/wcg_negative.json"};
  entry.config_snapshot = config_.canonical_string({"graphs."});
  manifest.record(std::move(entry));
  manifest.save(root_);
  return false;
}

WordGraph Pipeline::load_word_graph(Polarity polarity) const {
  const std::string prefix =
      (fs::path(graphs_dir()) /
       (polarity == Polarity::kPositive ? "wcg_positive" : "wcg_negative"))
          .string();
  return WordGraph::load(prefix);
}

// --- train / ablate -------------------------------------------------------------

TrainArtifactsBundle Pipeline::load_artifacts_bundle() const {
  TrainArtifactsBundle bundle;
  bundle.corpus = load_corpus();
  bundle.tfidf = load_tfidf();
  bundle.bow = load_bow();
  bundle.graph_pos = load_word_graph(Polarity::kPositive);
  bundle.graph_neg = load_word_graph(Polarity::kNegative);
  bundle.embeddings = load_embedding_table();
  return bundle;
}

bool Pipeline::run_train() {
  const std::uint64_t hash = train_hash();
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (manifest.fresh(root_, "train", hash)) return true;
  require_fresh("graphs", graphs_hash());

  TrainConfig tc = TrainConfig::from_config(config_);
  TrainArtifactsBundle bundle = load_artifacts_bundle();

  const fs::path dir = train_dir();
  fs::create_directories(dir);
  MultiSeedResult result = run_multi_seed(bundle.view(), tc, dir.string(), hash);

  StageEntry entry;
  entry.stage = "train";
  entry.hash = hash;
  for (const RunRecord& record : result.records) {
    const std::string name =
        "run_" + to_string(record.ablation) + "_seed" + std::to_string(record.seed) + ".json";
    record.save((dir / name).string());
    entry.outputs.push_back("train/" + name);
    entry.outputs.push_back(
        fs::relative(record.best_checkpoint_path, root_).string());
  }
  entry.config_snapshot = config_.canonical_string({"model.", "train.", "augment."});
  manifest.record(std::move(entry));
  manifest.save(root_);
  seed_failures_ = result.failures;
  return false;
}

bool Pipeline::run_ablate() {
  const std::uint64_t hash = ablate_hash();
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (manifest.fresh(root_, "ablate", hash)) return true;
  require_fresh("graphs", graphs_hash());

  TrainConfig tc = TrainConfig::from_config(config_);
  TrainArtifactsBundle bundle = load_artifacts_bundle();

  const fs::path dir = ablate_dir();
  fs::create_directories(dir);
  auto results = ablate(bundle.view(), tc, dir.string(), hash);

  seed_failures_.clear();
  StageEntry entry;
  entry.stage = "ablate";
  entry.hash = hash;
  for (const auto& [mode, result] : results) {
    for (const auto& failure : result.failures) seed_failures_.push_back(failure);
    for (const RunRecord& record : result.records) {
      const std::string name =
          "run_" + to_string(mode) + "_seed" + std::to_string(record.seed) + ".json";
      record.save((dir / name).string());
      entry.outputs.push_back("ablate/" + name);
    }
  }
  entry.config_snapshot = config_.canonical_string({"model.", "train.", "augment."});
  manifest.record(std::move(entry));
  manifest.save(root_);
  return false;
}

std::vector<RunRecord> Pipeline::load_train_records() const {
  std::vector<RunRecord> records;
  const fs::path dir = train_dir();
  if (!fs::exists(dir)) return records;
  std::vector<fs::path> paths;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.path().extension() == ".json") paths.push_back(item.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths) records.push_back(RunRecord::load(path.string()));
  return records;
}

std::map<AblationMode, std::vector<RunRecord>> Pipeline::load_ablate_records() const {
  std::map<AblationMode, std::vector<RunRecord>> out;
  const fs::path dir = ablate_dir();
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> paths;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.path().extension() == ".json") paths.push_back(item.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths) {
    RunRecord record = RunRecord::load(path.string());
    out[record.ablation].push_back(std::move(record));
  }
  return out;
}

// --- eval -----------------------------------------------------------------------

bool Pipeline::run_eval() {
  const std::uint64_t hash = eval_hash();
  PipelineManifest manifest = PipelineManifest::load_or_empty(root_);
  if (manifest.fresh(root_, "eval", hash)) return true;
  require_fresh("train", train_hash());

  TrainArtifactsBundle bundle = load_artifacts_bundle();
  const std::vector<RunRecord> records = load_train_records();
  if (records.empty()) throw StaleArtifactError("no train run records found; run train");

  const int top_n = config_.get_int("eval.top_words", 10);
  const CoherenceReference train_ref(bundle.corpus, Split::kTrain);

  const fs::path dir = eval_dir();
  fs::create_directories(dir);

  std::vector<double> coherence_per_seed;
  std::vector<double> accuracy_per_seed;
  double best_coherence = -2.0;
  std::string topics_dump;
  bool classification_enabled = true;

  for (const RunRecord& record : records) {
    ModelParams model = ModelParams::load_checkpoint(record.best_checkpoint_path);
    const TopicList topics = extract_topics(model.decoder, bundle.corpus.vocabulary, top_n);
    const CoherenceReport coherence = topic_coherence_npmi(topics, train_ref);
    coherence_per_seed.push_back(coherence.mean);

    RepresentationExport train_repr = export_representations(
        model, bundle.corpus, bundle.tfidf,
        bundle.embeddings ? &*bundle.embeddings : nullptr, Split::kTrain);
    RepresentationExport test_repr = export_representations(
        model, bundle.corpus, bundle.tfidf,
        bundle.embeddings ? &*bundle.embeddings : nullptr, Split::kTest);

    if (train_repr.has_labels && test_repr.has_labels) {
      RandomForestConfig rf;
      rf.trees = config_.get_int("eval.rf_trees", 500);
      rf.seed = record.seed;
      accuracy_per_seed.push_back(
          classify(train_repr.theta, train_repr.labels, test_repr.theta, test_repr.labels, rf));
    } else {
      classification_enabled = false;
    }

    if (coherence.mean > best_coherence) {
      best_coherence = coherence.mean;
      std::ostringstream topic_text;
      const auto words = topics.words(bundle.corpus.vocabulary);
      for (std::size_t t = 0; t < words.size(); ++t) {
        topic_text << "topic " << t << " (npmi " << std::fixed << std::setprecision(4)
                   << coherence.per_topic[t] << "):";
        for (const std::string& w : words[t]) topic_text << ' ' << w;
        topic_text << '\n';
      }
      topics_dump = topic_text.str();

      // Persist the best seed's representations, SparseMatrix TSV plus label
      // sidecar.
      SparseMatrix::from_dense(test_repr.theta)
          .save_tsv((dir / "theta_test.tsv").string());
      SparseMatrix::from_dense(train_repr.theta)
          .save_tsv((dir / "theta_train.tsv").string());
      std::ofstream labels(dir / "labels_test.tsv");
      for (std::size_t i = 0; i < test_repr.doc_ids.size(); ++i) {
        labels << test_repr.doc_ids[i] << '\t' << test_repr.labels[i] << '\n';
      }
    }
  }

  // Sample-quality diagnostic in edge-perturbation feature space.
  std::vector<int> all_rows;
  for (int i = 0; i < bundle.tfidf.rows(); ++i) all_rows.push_back(i);
  const SimilarityDiagnostic diag =
      similarity_diagnostic(bundle.tfidf, all_rows, bundle.graph_pos, bundle.graph_neg);

  const AggregateStat coherence_stat = aggregate(coherence_per_seed);
  const AggregateStat accuracy_stat = aggregate(accuracy_per_seed);

  nlohmann::json report{
      {"config_hash", hex64(train_hash())},
      {"coherence",
       {{"metric", "npmi"},
        {"mean", coherence_stat.mean},
        {"std", coherence_stat.stddev},
        {"per_seed", coherence_stat.per_seed},
        {"reference", train_ref.descriptor()}}},
      {"similarity",
       {{"mean_prototype_negative", diag.mean_negative},
        {"mean_prototype_positive", diag.mean_positive},
        {"documents", diag.documents}}},
  };
  if (classification_enabled && !accuracy_per_seed.empty()) {
    report["classification"] = {{"metric", "random_forest_accuracy"},
                                {"mean", accuracy_stat.mean},
                                {"std", accuracy_stat.stddev},
                                {"per_seed", accuracy_stat.per_seed}};
  } else {
    report["classification"] = nullptr;  // labels absent, export still succeeded
  }
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "topics.txt", topics_dump);

  std::ostringstream table;
  table << std::fixed << std::setprecision(3);
  table << "metric                         mean    std     seeds\n";
  table << "npmi coherence                 " << coherence_stat.mean << "   "
        << coherence_stat.stddev << "   " << coherence_per_seed.size() << "\n";
  table << "cos(prototype, negative)       " << diag.mean_negative << "\n";
  table << "cos(prototype, positive)       " << diag.mean_positive << "\n";
  if (classification_enabled && !accuracy_per_seed.empty()) {
    table << "rf accuracy                    " << accuracy_stat.mean << "   "
          << accuracy_stat.stddev << "   " << accuracy_per_seed.size() << "\n";
  }
  write_text(dir / "table.txt", table.str());

  StageEntry entry;
  entry.stage = "eval";
  entry.hash = hash;
  entry.outputs = {"eval/report.json",    "eval/table.txt",
                   "eval/topics.txt",     "eval/theta_test.tsv",
                   "eval/theta_train.tsv", "eval/labels_test.tsv"};
  entry.config_snapshot = config_.canonical_string({"eval."});
  manifest.record(std::move(entry));
  manifest.save(root_);
  return false;
}

// --- report ---------------------------------------------------------------------

void Pipeline::run_report() {
  const std::vector<RunRecord> train_records = load_train_records();
  const auto ablate_records = load_ablate_records();
  if (train_records.empty() && ablate_records.empty()) {
    throw StaleArtifactError("nothing to report: run train or ablate first");
  }

  const fs::path dir = report_dir();
  fs::create_directories(dir);

  nlohmann::json j;
  std::ostringstream table;
  table << std::fixed << std::setprecision(3);

  if (!train_records.empty()) {
    std::vector<double> npmis;
    for (const RunRecord& r : train_records) npmis.push_back(r.best_val_npmi);
    const AggregateStat stat = aggregate(npmis);
    j["train"] = {{"metric", "val_npmi"},
                  {"mean", stat.mean},
                  {"std", stat.stddev},
                  {"per_seed", stat.per_seed},
                  {"config_hash", hex64(train_hash())}};
    table << "model                npmi\n";
    table << "GCTM (" << npmis.size() << " seeds)      " << stat.mean << " +/- "
          << stat.stddev << "\n";
  }
  if (!ablate_records.empty()) {
    table << "\nablation             npmi\n";
    nlohmann::json ab;
    for (const auto& [mode, records] : ablate_records) {
      std::vector<double> npmis;
      for (const RunRecord& r : records) npmis.push_back(r.best_val_npmi);
      const AggregateStat stat = aggregate(npmis);
      ab[to_string(mode)] = {{"mean", stat.mean},
                             {"std", stat.stddev},
                             {"per_seed", stat.per_seed}};
      std::string label = to_string(mode);
      if (label == "no_cl") label = "w/o cl";
      if (label == "no_neg") label = "w/o neg";
      if (label == "no_pos") label = "w/o pos";
      table << label << std::string(21 - label.size(), ' ') << stat.mean << " +/- "
            << stat.stddev << "\n";
    }
    j["ablation"] = ab;
  }
  // Fold in the eval-stage report when it exists.
  const fs::path eval_report = fs::path(eval_dir()) / "report.json";
  if (fs::exists(eval_report)) {
    std::ifstream in(eval_report);
    j["eval"] = nlohmann::json::parse(in);
  }

  write_text(dir / "report.json", j.dump(2) + "\n");
  write_text(dir / "table.txt", table.str());
}

}  // namespace gctm
