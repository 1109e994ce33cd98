#pragma once

#include <Eigen/Core>
#include <set>
#include <utility>
#include <vector>

#include "geosink/graph.hpp"
#include "geosink/rng.hpp"
#include "geosink/sparse.hpp"
#include "geosink/transport.hpp"

namespace testutil {

using geosink::Rng;

// Connected weighted graph: a ring plus random chords. Weights are kept
// small enough that combinatorial spectra stay comfortably inside the
// Chebyshev budget of the tests.
inline geosink::SparseSymMatrix random_connected_graph(int n, std::uint64_t seed,
                                                       double chord_fraction = 1.0) {
  Rng rng(seed);
  std::set<std::pair<int, int>> edges;
  std::vector<geosink::Triplet> trips;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    edges.emplace(std::min(i, j), std::max(i, j));
    trips.push_back({std::min(i, j), std::max(i, j), rng.uniform(0.3, 1.0)});
  }
  const int chords = static_cast<int>(chord_fraction * n);
  for (int c = 0; c < chords; ++c) {
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double w = rng.uniform(0.2, 0.8);
    if (i == j || !edges.emplace(std::min(i, j), std::max(i, j)).second) continue;
    trips.push_back({std::min(i, j), std::max(i, j), w});
  }
  return geosink::SparseSymMatrix::from_triplets(n, trips);
}

inline geosink::SparseSymMatrix path_graph(int n, double weight = 1.0) {
  std::vector<geosink::Triplet> trips;
  for (int i = 0; i + 1 < n; ++i) trips.push_back({i, i + 1, weight});
  return geosink::SparseSymMatrix::from_triplets(n, trips);
}

inline Eigen::VectorXd random_signal(int n, Rng& rng) {
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) f(i) = rng.normal();
  return f;
}

inline geosink::Distribution random_distribution(int n, Rng& rng) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.uniform() + 1e-3;
  return geosink::Distribution::from_weights(std::move(w));
}

}  // namespace testutil
