#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace gctm {

// Coordinate-form sparse matrix shared by TF-IDF features, NPMI scores and
// graph adjacencies. Entries are kept sorted by (row, col) with no duplicates
// and finite weights; the builder merges duplicate coordinates by summation.
class SparseMatrix {
 public:
  struct Entry {
    int row;
    int col;
    double weight;
  };

  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}

  // Sorts, merges duplicates (summing weights), drops explicit zeros and
  // validates ranges. Throws FormatError on out-of-range indices or
  // non-finite weights.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Entry> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  // Zero when absent. Binary search over the sorted entry list.
  double at(int row, int col) const;

  bool is_symmetric(double tol = 0.0) const;

  Eigen::SparseMatrix<double> to_eigen() const;
  Eigen::SparseMatrix<double, Eigen::RowMajor> to_eigen_row_major() const;
  Eigen::MatrixXd to_dense() const;
  static SparseMatrix from_eigen(const Eigen::SparseMatrix<double>& m);
  static SparseMatrix from_dense(const Eigen::MatrixXd& m, double prune_below = 0.0);

  // TSV with header "rows cols nnz" and entries "row\tcol\tweight", weights
  // printed with 17 significant digits so a write/read round trip is exact.
  void save_tsv(const std::string& path) const;
  static SparseMatrix load_tsv(const std::string& path);
  void write_tsv(std::ostream& out) const;
  static SparseMatrix read_tsv(std::istream& in, const std::string& origin = "<stream>");

  bool operator==(const SparseMatrix& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace gctm
