#include "geosink/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "geosink/rng.hpp"

namespace geosink {

LaplacianKind laplacian_kind_from_string(const std::string& s) {
  if (s == "combinatorial") return LaplacianKind::combinatorial;
  if (s == "normalized") return LaplacianKind::normalized;
  fail(errc::invalid_argument, "unknown laplacian kind '" + s + "'");
}

namespace {

// k smallest (squared distance, index) pairs per query row, ties to the
// lower index. The heap keeps the current worst candidate on top.
struct Candidate {
  double d2;
  int idx;
  bool operator<(const Candidate& other) const {
    return d2 != other.d2 ? d2 < other.d2 : idx < other.idx;
  }
};

void select_knn(const Eigen::MatrixXd& points, int k, std::vector<std::vector<int>>& neighbors,
                Eigen::VectorXd& eps) {
  const int n = static_cast<int>(points.rows());
  neighbors.assign(static_cast<std::size_t>(n), {});
  eps.resize(n);

  const Eigen::VectorXd sq_norms = points.rowwise().squaredNorm();
  const int block = 256;
  Eigen::MatrixXd gram;

  for (int r0 = 0; r0 < n; r0 += block) {
    const int rows = std::min(block, n - r0);
    gram.noalias() = points.middleRows(r0, rows) * points.transpose();

#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < rows; ++bi) {
      const int i = r0 + bi;
      std::vector<Candidate> heap;
      heap.reserve(static_cast<std::size_t>(k));
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d2 = std::max(0.0, sq_norms(i) + sq_norms(j) - 2.0 * gram(bi, j));
        const Candidate c{d2, j};
        if (static_cast<int>(heap.size()) < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      std::sort_heap(heap.begin(), heap.end());
      auto& nb = neighbors[static_cast<std::size_t>(i)];
      nb.resize(heap.size());
      for (std::size_t q = 0; q < heap.size(); ++q) nb[q] = heap[q].idx;
      // Exact distance to the selected k-th neighbour; the blocked Gram
      // product is only used to pick the indices.
      eps(i) = (points.row(i) - points.row(nb.back())).norm();
    }
  }
}

}  // namespace

SparseSymMatrix knn_alpha_decay_graph(const PointCloud& cloud, int k, double alpha) {
  cloud.validate();
  const int n = static_cast<int>(cloud.size());
  require(k >= 1, errc::invalid_argument, "k must be positive");
  require(k < n, errc::invalid_argument, "k must be < n");
  require(alpha > 0.0, errc::invalid_argument, "alpha must be positive");

  std::vector<std::vector<int>> neighbors;
  Eigen::VectorXd eps;
  select_knn(cloud.points, k, neighbors, eps);

  for (int i = 0; i < n; ++i)
    require(eps(i) > 0.0, errc::duplicate_points,
            "zero k-NN bandwidth at point " + std::to_string(i) + " (duplicate points)");

  // Union of directed k-NN relations, one undirected entry per pair.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i)
    for (int j : neighbors[static_cast<std::size_t>(i)])
      pairs.emplace_back(std::min(i, j), std::max(i, j));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Triplet> trips;
  trips.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    const double d = (cloud.points.row(i) - cloud.points.row(j)).norm();
    const double w =
        0.5 * (std::exp(-std::pow(d / eps(i), alpha)) + std::exp(-std::pow(d / eps(j), alpha)));
    trips.push_back({i, j, w});
  }
  return SparseSymMatrix::from_triplets(n, trips);
}

GraphLaplacian laplacian(const SparseSymMatrix& A, LaplacianKind kind) {
  const int n = A.size();
  const auto& offs = A.row_offsets();
  const auto& cols = A.col_indices();
  const auto& vals = A.values();

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int p = offs[static_cast<std::size_t>(i)]; p < offs[static_cast<std::size_t>(i) + 1]; ++p) {
      require(vals[p] >= 0.0, errc::negative_weight, "adjacency entries must be non-negative");
      degree(i) += vals[p];
    }
  }

  std::vector<Triplet> trips;
  trips.reserve(vals.size() / 2 + static_cast<std::size_t>(n));
  GraphLaplacian g;
  g.kind = kind;

  if (kind == LaplacianKind::combinatorial) {
    for (int i = 0; i < n; ++i) {
      double diag = degree(i);
      for (int p = offs[static_cast<std::size_t>(i)]; p < offs[static_cast<std::size_t>(i) + 1]; ++p) {
        const int j = cols[p];
        if (j == i) {
          diag -= vals[p];  // D - A on the diagonal
        } else if (j > i) {
          trips.push_back({i, j, -vals[p]});
        }
      }
      trips.push_back({i, i, diag});
    }
    g.matrix = SparseSymMatrix::from_triplets(n, trips);
    g.lambda_max_bound = estimate_lambda_max(g.matrix);
  } else {
    // Degree-0 vertices keep an identity row.
    Eigen::VectorXd inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(degree(i) > 0.0 ? degree(i) : 1.0);
    for (int i = 0; i < n; ++i) {
      double diag = 1.0;
      for (int p = offs[static_cast<std::size_t>(i)]; p < offs[static_cast<std::size_t>(i) + 1]; ++p) {
        const int j = cols[p];
        const double w = vals[p] * inv_sqrt(i) * inv_sqrt(j);
        if (j == i) {
          diag -= w;
        } else if (j > i) {
          trips.push_back({i, j, -w});
        }
      }
      trips.push_back({i, i, diag});
    }
    g.matrix = SparseSymMatrix::from_triplets(n, trips);
    g.lambda_max_bound = 2.0;
  }
  return g;
}

double estimate_lambda_max(const SparseSymMatrix& L) {
  const int n = L.size();
  if (n == 0) return 0.0;

  Rng rng(0x5eed1a4bu);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  x.normalize();

  Eigen::VectorXd y(n);
  double estimate = 0.0;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    L.multiply(x, y);
    const double norm = y.norm();
    if (norm <= 1e-300) return 0.0;  // null operator
    const double rayleigh = x.dot(y);
    if (it > 0 && std::abs(rayleigh - estimate) <= 1e-6 * std::abs(rayleigh)) {
      estimate = rayleigh;
      converged = true;
      break;
    }
    estimate = rayleigh;
    x = y / norm;
  }
  if (!converged) return L.gershgorin_bound();
  return 1.01 * estimate;
}

}  // namespace geosink
