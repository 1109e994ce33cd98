#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "geosink/errors.hpp"

namespace geosink {

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Triplet {
  int row;
  int col;
  double value;
};

// Symmetric sparse matrix in compressed-row form. Construction enforces
// structural and numerical symmetry; both triangles are stored so that
// row traversal alone suffices for matrix-vector products.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  // Entries may be given in either or both triangles; (i,j) and (j,i)
  // duplicates must agree. Explicit zeros are dropped.
  static SparseSymMatrix from_triplets(int n, const std::vector<Triplet>& entries);

  int size() const { return n_; }
  std::int64_t stored_entries() const { return static_cast<std::int64_t>(values_.size()); }

  const std::vector<int>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  double coeff(int i, int j) const;

  // y = A x
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  // Y = A X, with signals as columns of a row-major matrix so that each
  // sparse entry streams across all signals at once.
  void multiply(const RowMajorXd& x, RowMajorXd& y) const;

  double max_abs() const;

  // max_i sum_j |A_ij|; an upper bound on the spectral radius.
  double gershgorin_bound() const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

 private:
  int n_ = 0;
  std::vector<int> row_offsets_ = {0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

// Coordinate-list text format: header "n nnz", then one "i j value" line per
// stored upper-triangle (i <= j) entry, round-trippable to the last bit.
void save_graph(const SparseSymMatrix& m, const std::string& path);
SparseSymMatrix load_graph(const std::string& path);

}  // namespace geosink
