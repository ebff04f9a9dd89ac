#include "gctm/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gctm/error.hpp"

namespace gctm {

namespace {

void format_weight(std::ostream& out, double w) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w,
                                 std::chars_format::general, 17);
  out.write(buf, ptr - buf);
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw FormatError("sparse entry (" + std::to_string(e.row) + "," +
                        std::to_string(e.col) + ") outside " + std::to_string(rows) +
                        "x" + std::to_string(cols));
    }
    if (!std::isfinite(e.weight)) {
      throw FormatError("non-finite sparse weight at (" + std::to_string(e.row) +
                        "," + std::to_string(e.col) + ")");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix out(rows, cols);
  out.entries_.reserve(entries.size());
  for (const Entry& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().row == e.row &&
        out.entries_.back().col == e.col) {
      out.entries_.back().weight += e.weight;
    } else {
      out.entries_.push_back(e);
    }
  }
  std::erase_if(out.entries_, [](const Entry& e) { return e.weight == 0.0; });
  return out;
}

double SparseMatrix::at(int row, int col) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{row, col},
                             [](const Entry& e, const std::pair<int, int>& key) {
                               return e.row != key.first ? e.row < key.first
                                                         : e.col < key.second;
                             });
  if (it != entries_.end() && it->row == row && it->col == col) return it->weight;
  return 0.0;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (const Entry& e : entries_) {
    if (std::abs(at(e.col, e.row) - e.weight) > tol) return false;
  }
  return true;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries_.size());
  for (const Entry& e : entries_) trips.emplace_back(e.row, e.col, e.weight);
  Eigen::SparseMatrix<double> m(rows_, cols_);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseMatrix::to_eigen_row_major() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries_.size());
  for (const Entry& e : entries_) trips.emplace_back(e.row, e.col, e.weight);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(rows_, cols_);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
  for (const Entry& e : entries_) m(e.row, e.col) += e.weight;
  return m;
}

SparseMatrix SparseMatrix::from_eigen(const Eigen::SparseMatrix<double>& m) {
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(m.nonZeros()));
  for (int k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                       std::move(entries));
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& m, double prune_below) {
  std::vector<Entry> entries;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (std::abs(m(r, c)) > prune_below) entries.push_back({r, c, m(r, c)});
    }
  }
  return from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                       std::move(entries));
}

void SparseMatrix::write_tsv(std::ostream& out) const {
  out << rows_ << ' ' << cols_ << ' ' << entries_.size() << '\n';
  for (const Entry& e : entries_) {
    out << e.row << '\t' << e.col << '\t';
    format_weight(out, e.weight);
    out << '\n';
  }
}

void SparseMatrix::save_tsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  write_tsv(out);
  if (!out) throw FormatError("write failed: " + path);
}

SparseMatrix SparseMatrix::read_tsv(std::istream& in, const std::string& origin) {
  int rows = 0, cols = 0;
  std::size_t nnz = 0;
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty sparse matrix file: " + origin);
  {
    std::istringstream hs(header);
    if (!(hs >> rows >> cols >> nnz)) {
      throw FormatError("bad sparse header '" + header + "' in " + origin);
    }
  }
  std::vector<Entry> entries;
  entries.reserve(nnz);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Entry e{};
    if (!(ls >> e.row >> e.col >> e.weight)) {
      throw FormatError("bad sparse entry '" + line + "' in " + origin);
    }
    entries.push_back(e);
  }
  if (entries.size() != nnz) {
    throw FormatError("sparse entry count mismatch in " + origin + ": header says " +
                      std::to_string(nnz) + ", found " + std::to_string(entries.size()));
  }
  return from_triplets(rows, cols, std::move(entries));
}

SparseMatrix SparseMatrix::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  return read_tsv(in, path);
}

bool SparseMatrix::operator==(const SparseMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ ||
      entries_.size() != other.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& a = entries_[i];
    const Entry& b = other.entries_[i];
    if (a.row != b.row || a.col != b.col || a.weight != b.weight) return false;
  }
  return true;
}

}  // namespace gctm
