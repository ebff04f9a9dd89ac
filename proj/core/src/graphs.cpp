#include "gctm/graphs.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gctm/error.hpp"

namespace gctm {

std::string to_string(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "positive") return Polarity::kPositive;
  if (s == "negative") return Polarity::kNegative;
  throw FormatError("unknown polarity: " + s);
}

Dwbg make_dwbg(const SparseMatrix& tfidf, const std::string& doc_id, int row) {
  if (row < 0 || row >= tfidf.rows()) {
    throw FormatError("DWBG row " + std::to_string(row) + " outside feature matrix");
  }
  Dwbg out;
  out.doc_id = doc_id;
  out.weights.resize(tfidf.cols());
  for (const SparseMatrix::Entry& e : tfidf.entries()) {
    if (e.row == row) out.weights.insert(e.col) = e.weight;
  }
  return out;
}

NpmiMatrix compute_npmi(const CooccurrenceStats& stats) {
  if (stats.total_windows <= 0) throw ConfigError("co-occurrence stats have no windows");
  const auto total = static_cast<double>(stats.total_windows);
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(stats.pair_counts.nnz());
  for (const SparseMatrix::Entry& e : stats.pair_counts.entries()) {
    if (e.row == e.col || e.weight <= 0.0) continue;
    const double p_ij = e.weight / total;
    const double p_i = static_cast<double>(stats.word_counts[static_cast<std::size_t>(e.row)]) / total;
    const double p_j = static_cast<double>(stats.word_counts[static_cast<std::size_t>(e.col)]) / total;
    double score;
    if (p_ij >= 1.0) {
      score = 1.0;  // every window contains the pair; the -ln p denominator vanishes
    } else {
      score = std::log(p_ij / (p_i * p_j)) / (-std::log(p_ij));
    }
    // Counting guarantees p_ij <= min(p_i, p_j); clamp residual float error.
    score = std::clamp(score, -1.0, 1.0);
    entries.push_back({e.row, e.col, score});
  }
  NpmiMatrix out;
  out.scores = SparseMatrix::from_triplets(stats.pair_counts.rows(),
                                           stats.pair_counts.cols(), std::move(entries));
  return out;
}

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency) {
  const int n = adjacency.rows();
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    degree[static_cast<std::size_t>(e.row)] += e.weight;
  }
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(adjacency.nnz());
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    const double di = degree[static_cast<std::size_t>(e.row)];
    const double dj = degree[static_cast<std::size_t>(e.col)];
    if (di <= 0.0 || dj <= 0.0) continue;
    entries.push_back({e.row, e.col, e.weight / std::sqrt(di * dj)});
  }
  return SparseMatrix::from_triplets(n, adjacency.cols(), std::move(entries));
}

WordGraph build_word_graph(const NpmiMatrix& npmi, Polarity polarity, double threshold) {
  if (threshold < 0.0) throw ConfigError("word-graph threshold must be nonnegative");
  const int v = npmi.scores.rows();
  std::vector<SparseMatrix::Entry> entries;
  bool any_edge = false;
  for (const SparseMatrix::Entry& e : npmi.scores.entries()) {
    if (e.row == e.col) continue;
    if (polarity == Polarity::kPositive) {
      if (e.weight >= threshold) {
        entries.push_back(e);
        any_edge = true;
      }
    } else {
      if (e.weight <= -threshold) {
        entries.push_back({e.row, e.col, std::abs(e.weight)});
        any_edge = true;
      }
    }
  }
  if (polarity == Polarity::kPositive) {
    for (int i = 0; i < v; ++i) entries.push_back({i, i, 1.0});
  }
  WordGraph graph;
  graph.polarity = polarity;
  graph.threshold = threshold;
  graph.adjacency = SparseMatrix::from_triplets(v, v, std::move(entries));
  graph.normalized = normalize_adjacency(graph.adjacency);
  graph.empty_warning = !any_edge;
  return graph;
}

void WordGraph::save(const std::string& path_prefix) const {
  adjacency.save_tsv(path_prefix + "_A.tsv");
  normalized.save_tsv(path_prefix + "_Anorm.tsv");
  nlohmann::json meta{{"polarity", to_string(polarity)},
                      {"threshold", threshold},
                      {"v", adjacency.rows()},
                      {"nnz", adjacency.nnz()}};
  std::ofstream out(path_prefix + ".json");
  if (!out) throw FormatError("cannot open for writing: " + path_prefix + ".json");
  out << meta.dump(2) << '\n';
}

WordGraph WordGraph::load(const std::string& path_prefix) {
  std::ifstream in(path_prefix + ".json");
  if (!in) throw FormatError("cannot open: " + path_prefix + ".json");
  nlohmann::json meta = nlohmann::json::parse(in);
  WordGraph graph;
  graph.polarity = polarity_from_string(meta.at("polarity").get<std::string>());
  graph.threshold = meta.at("threshold").get<double>();
  graph.adjacency = SparseMatrix::load_tsv(path_prefix + "_A.tsv");
  graph.normalized = SparseMatrix::load_tsv(path_prefix + "_Anorm.tsv");
  if (graph.adjacency.rows() != meta.at("v").get<int>()) {
    throw FormatError("word graph sidecar disagrees with adjacency size: " + path_prefix);
  }
  return graph;
}

}  // namespace gctm
