#pragma once

#include <Eigen/Core>

#include "geosink/pointcloud.hpp"
#include "geosink/sparse.hpp"

namespace geosink {

enum class LaplacianKind { combinatorial, normalized };

inline const char* to_string(LaplacianKind k) {
  return k == LaplacianKind::combinatorial ? "combinatorial" : "normalized";
}

LaplacianKind laplacian_kind_from_string(const std::string& s);

struct GraphLaplacian {
  SparseSymMatrix matrix;
  LaplacianKind kind = LaplacianKind::combinatorial;
  double lambda_max_bound = 0.0;

  int size() const { return matrix.size(); }
};

// k-nearest-neighbour affinity with per-point bandwidth and exponential
// alpha decay:
//   A_ij = 1/2 exp(-(|xi-xj|/eps_k(i))^alpha) + 1/2 exp(-(|xi-xj|/eps_k(j))^alpha)
// kept for pairs where j is among the k nearest neighbours of i or vice
// versa; eps_k(i) is the distance from x_i to its k-th nearest neighbour.
// Neighbour search is exact brute force; distance ties break to the lower
// index. Throws DuplicatePoints when some bandwidth degenerates to zero.
SparseSymMatrix knn_alpha_decay_graph(const PointCloud& cloud, int k, double alpha);

// combinatorial: L = D - A. normalized: L = I - D^{-1/2} A D^{-1/2}, with
// degree-0 vertices treated as degree 1 (their row becomes an identity row).
GraphLaplacian laplacian(const SparseSymMatrix& A, LaplacianKind kind);

// Upper bound on the largest eigenvalue of a symmetric PSD matrix: power
// iteration to relative tolerance 1e-6 (at most 200 rounds) inflated by 1%,
// falling back to the Gershgorin bound when the iteration stalls.
double estimate_lambda_max(const SparseSymMatrix& L);

}  // namespace geosink
