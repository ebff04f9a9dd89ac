#pragma once

#include <string>

#include "gctm/corpus.hpp"
#include "gctm/sparse.hpp"

namespace gctm {

enum class Polarity { kPositive, kNegative };

std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

// Symmetric v x v NPMI scores in [-1, 1]. Pairs that never co-occur are
// absent from the sparse structure (their limit value is -1).
struct NpmiMatrix {
  SparseMatrix scores;
};

// Thresholded word co-occurrence graph. The positive graph keeps
// NPMI >= mu_plus off-diagonal edges and a unit diagonal; the negative graph
// keeps |NPMI| for NPMI <= -mu_minus and has no self-loops.
struct WordGraph {
  Polarity polarity = Polarity::kPositive;
  double threshold = 0.0;
  SparseMatrix adjacency;   // A
  SparseMatrix normalized;  // D^{-1/2} A D^{-1/2}
  bool empty_warning = false;  // no surviving off-diagonal edge

  void save(const std::string& path_prefix) const;
  static WordGraph load(const std::string& path_prefix);
};

// A document's row of the document-word bipartite graph: edge weights equal
// the TF-IDF feature, so entry i > 0 iff word i appears in the document.
struct Dwbg {
  std::string doc_id;
  Eigen::SparseVector<double> weights;  // length v
};

Dwbg make_dwbg(const SparseMatrix& tfidf, const std::string& doc_id, int row);

// NPMI = ln(p(i,j) / (p(i) p(j))) / (-ln p(i,j)) with window-relative
// frequencies; p(i,j) = 1 maps to +1. Zero-co-occurrence pairs stay absent.
NpmiMatrix compute_npmi(const CooccurrenceStats& stats);

WordGraph build_word_graph(const NpmiMatrix& npmi, Polarity polarity, double threshold);

// Degree-normalized adjacency: entry (i,j) -> a_ij / sqrt(deg_i deg_j).
// Rows and columns with zero degree stay all-zero.
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency);

}  // namespace gctm
