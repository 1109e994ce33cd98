#include "geosink/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geosink {

SparseSymMatrix SparseSymMatrix::from_triplets(int n, const std::vector<Triplet>& entries) {
  require(n >= 0, errc::invalid_argument, "negative dimension");

  // Mirror every entry so both triangles are stored, then sort and merge.
  std::vector<Triplet> all;
  all.reserve(entries.size() * 2);
  for (const auto& t : entries) {
    require(t.row >= 0 && t.row < n && t.col >= 0 && t.col < n, errc::index_out_of_range,
            "triplet index out of range");
    require(std::isfinite(t.value), errc::invalid_argument, "non-finite matrix entry");
    if (t.value == 0.0) continue;
    all.push_back(t);
    if (t.row != t.col) all.push_back({t.col, t.row, t.value});
  }
  std::sort(all.begin(), all.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseSymMatrix m;
  m.n_ = n;
  m.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  m.col_indices_.reserve(all.size());
  m.values_.reserve(all.size());
  int prev_row = -1, prev_col = -1;
  for (const auto& t : all) {
    if (t.row == prev_row && t.col == prev_col) {
      require(t.value == m.values_.back(), errc::invalid_argument,
              "conflicting duplicate entries break symmetry");
      continue;
    }
    prev_row = t.row;
    prev_col = t.col;
    m.col_indices_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.row_offsets_[static_cast<std::size_t>(t.row) + 1];
  }
  for (int r = 0; r < n; ++r) m.row_offsets_[static_cast<std::size_t>(r) + 1] += m.row_offsets_[r];
  return m;
}

double SparseSymMatrix::coeff(int i, int j) const {
  require(i >= 0 && i < n_ && j >= 0 && j < n_, errc::index_out_of_range, "coeff index");
  const auto begin = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i)];
  const auto end = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Eigen::VectorXd SparseSymMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(n_);
  multiply(x, y);
  return y;
}

void SparseSymMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  require(x.size() == n_, errc::length_mismatch, "matvec size");
  y.resize(n_);
  const int* cols = col_indices_.data();
  const double* vals = values_.data();
  const double* xv = x.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int p = row_offsets_[static_cast<std::size_t>(i)]; p < row_offsets_[static_cast<std::size_t>(i) + 1]; ++p)
      acc += vals[p] * xv[cols[p]];
    y(i) = acc;
  }
}

void SparseSymMatrix::multiply(const RowMajorXd& x, RowMajorXd& y) const {
  require(x.rows() == n_, errc::length_mismatch, "matmat size");
  y.resize(n_, x.cols());
  const int* cols = col_indices_.data();
  const double* vals = values_.data();
  const Eigen::Index width = x.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_; ++i) {
    auto out = y.row(i);
    out.setZero();
    for (int p = row_offsets_[static_cast<std::size_t>(i)]; p < row_offsets_[static_cast<std::size_t>(i) + 1]; ++p)
      out += vals[p] * x.row(cols[p]);
    (void)width;
  }
}

double SparseSymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseSymMatrix::gershgorin_bound() const {
  double bound = 0.0;
  for (int i = 0; i < n_; ++i) {
    double row = 0.0;
    for (int p = row_offsets_[static_cast<std::size_t>(i)]; p < row_offsets_[static_cast<std::size_t>(i) + 1]; ++p)
      row += std::abs(values_[p]);
    bound = std::max(bound, row);
  }
  return bound;
}

Eigen::MatrixXd SparseSymMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int p = row_offsets_[static_cast<std::size_t>(i)]; p < row_offsets_[static_cast<std::size_t>(i) + 1]; ++p)
      d(i, col_indices_[p]) = values_[p];
  return d;
}

Eigen::SparseMatrix<double> SparseSymMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(values_.size());
  for (int i = 0; i < n_; ++i)
    for (int p = row_offsets_[static_cast<std::size_t>(i)]; p < row_offsets_[static_cast<std::size_t>(i) + 1]; ++p)
      trips.emplace_back(i, col_indices_[p], values_[p]);
  Eigen::SparseMatrix<double> s(n_, n_);
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

void save_graph(const SparseSymMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  std::int64_t upper = 0;
  for (int i = 0; i < m.size(); ++i) {
    const auto& offs = m.row_offsets();
    for (int p = offs[static_cast<std::size_t>(i)]; p < offs[static_cast<std::size_t>(i) + 1]; ++p)
      if (m.col_indices()[p] >= i) ++upper;
  }
  out << m.size() << ' ' << upper << '\n';
  out.precision(17);
  for (int i = 0; i < m.size(); ++i) {
    const auto& offs = m.row_offsets();
    for (int p = offs[static_cast<std::size_t>(i)]; p < offs[static_cast<std::size_t>(i) + 1]; ++p) {
      const int j = m.col_indices()[p];
      if (j < i) continue;
      out << i << ' ' << j << ' ' << m.values()[p] << '\n';
    }
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

SparseSymMatrix load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  int n = 0;
  std::int64_t nnz = 0;
  if (!(in >> n >> nnz)) fail(errc::io_error, "bad graph header in '" + path + "'");
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (std::int64_t e = 0; e < nnz; ++e) {
    int i, j;
    double v;
    if (!(in >> i >> j >> v)) fail(errc::io_error, "truncated graph file '" + path + "'");
    trips.push_back({i, j, v});
  }
  return SparseSymMatrix::from_triplets(n, trips);
}

}  // namespace geosink
