#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "geosink/barycenter.hpp"
#include "geosink/heat.hpp"
#include "test_util.hpp"

using namespace geosink;

namespace {

// Dense-kernel reference for the Bregman-projection barycenter: identical
// iteration run against the exact heat matrix instead of the Chebyshev
// filter. Pins the semantics independently of the polynomial path.
Eigen::VectorXd dense_barycenter_oracle(const Eigen::MatrixXd& heat,
                                        const std::vector<Eigen::VectorXd>& members,
                                        const Eigen::VectorXd& alphas, const Eigen::VectorXd& a,
                                        int max_iter, double tol) {
  const auto n = heat.rows();
  const int m = static_cast<int>(members.size());
  std::vector<Eigen::VectorXd> v(members.size()), w(members.size(), Eigen::VectorXd::Ones(n)),
      phi(members.size()), psi(members.size());
  auto app = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((heat * a.cwiseProduct(x)).cwiseMax(1e-300));
  };
  for (int i = 0; i < m; ++i) phi[static_cast<std::size_t>(i)] = app(w[static_cast<std::size_t>(i)]);
  Eigen::VectorXd bary = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd log_bary = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
      auto& vi = v[static_cast<std::size_t>(i)];
      vi = members[static_cast<std::size_t>(i)].cwiseQuotient(phi[static_cast<std::size_t>(i)]);
      psi[static_cast<std::size_t>(i)] = app(vi);
      log_bary += alphas(i) * psi[static_cast<std::size_t>(i)].array().log().matrix();
    }
    bary = (log_bary.array() - log_bary.maxCoeff()).exp();
    bary /= bary.sum();
    double err = 0.0;
    for (int i = 0; i < m; ++i) {
      w[static_cast<std::size_t>(i)] = bary.cwiseQuotient(psi[static_cast<std::size_t>(i)]);
      phi[static_cast<std::size_t>(i)] = app(w[static_cast<std::size_t>(i)]);
      err = std::max(err, (v[static_cast<std::size_t>(i)]
                               .cwiseProduct(phi[static_cast<std::size_t>(i)]) -
                           members[static_cast<std::size_t>(i)])
                              .lpNorm<1>());
    }
    if (err <= tol) break;
  }
  return bary / bary.sum();
}

GraphLaplacian path3() {
  return laplacian(testutil::path_graph(3), LaplacianKind::combinatorial);
}

}  // namespace

TEST_CASE("single-member family reproduces the member in the small-time limit") {
  Rng rng(3);
  const auto lap = laplacian(testutil::random_connected_graph(25, 2), LaplacianKind::normalized);
  const HeatFilter filter(lap, 1e-8, 5);
  DistributionFamily family;
  family.members.push_back(testutil::random_distribution(25, rng));
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(25, 1.0 / 25);
  const auto res = sinkhorn_barycenter(filter, family, a, {200, 1e-6});
  CHECK(res.converged);
  CHECK((res.barycenter.weights - family.members[0].weights).lpNorm<1>() <= 1e-6);
}

TEST_CASE("impulses at path ends concentrate the barycenter in the middle") {
  const auto lap = path3();
  const double t = 0.3;
  const HeatFilter filter(lap, t, 30);
  DistributionFamily family;
  family.members.push_back(Distribution::indicator(3, {0}));
  family.members.push_back(Distribution::indicator(3, {2}));
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 1.0 / 3);
  const auto res = sinkhorn_barycenter(filter, family, a, {500, 1e-9});
  REQUIRE(res.converged);
  CHECK(res.barycenter.weights(1) > res.barycenter.weights(0));
  CHECK(res.barycenter.weights(1) > res.barycenter.weights(2));

  const Eigen::MatrixXd heat = exact_heat_oracle(lap, t);
  const Eigen::VectorXd oracle = dense_barycenter_oracle(
      heat, {family.members[0].weights, family.members[1].weights},
      Eigen::Vector2d(0.5, 0.5), a, 500, 1e-9);
  CHECK((res.barycenter.weights - oracle).lpNorm<1>() <= 1e-8);
}

TEST_CASE("barycenter inherits graph automorphisms of the family") {
  // Cycle of 8 vertices, impulses at antipodal vertices 0 and 4; rotation by
  // four positions maps the family to itself.
  std::vector<Triplet> trips;
  for (int i = 0; i < 8; ++i) trips.push_back({i, (i + 1) % 8, 1.0});
  const auto lap = laplacian(SparseSymMatrix::from_triplets(8, trips), LaplacianKind::combinatorial);
  const HeatFilter filter(lap, 0.5, 30);
  DistributionFamily family;
  family.members.push_back(Distribution::indicator(8, {0}));
  family.members.push_back(Distribution::indicator(8, {4}));
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(8, 1.0 / 8);
  const auto res = sinkhorn_barycenter(filter, family, a, {500, 1e-10});
  REQUIRE(res.converged);
  for (int i = 0; i < 8; ++i)
    CHECK(std::abs(res.barycenter.weights(i) - res.barycenter.weights((i + 4) % 8)) <= 1e-8);
}

TEST_CASE("degenerate family weights reduce to the first member's run") {
  Rng rng(5);
  const auto lap = laplacian(testutil::random_connected_graph(20, 6), LaplacianKind::normalized);
  const HeatFilter filter(lap, 0.5, 25);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(20, 1.0 / 20);

  DistributionFamily pair;
  pair.members.push_back(testutil::random_distribution(20, rng));
  pair.members.push_back(testutil::random_distribution(20, rng));
  pair.alphas = Eigen::Vector2d(1.0, 0.0);

  DistributionFamily solo;
  solo.members.push_back(pair.members[0]);

  const auto with_zero = sinkhorn_barycenter(filter, pair, a, {300, 1e-8});
  const auto alone = sinkhorn_barycenter(filter, solo, a, {300, 1e-8});
  CHECK((with_zero.barycenter.weights - alone.barycenter.weights).lpNorm<1>() <= 1e-9);
}

TEST_CASE("chebyshev barycenter matches the dense-kernel oracle") {
  Rng rng(8);
  const int n = 60;
  const auto lap = laplacian(testutil::random_connected_graph(n, 9), LaplacianKind::normalized);
  const double t = 0.8;
  const HeatFilter filter(lap, t, 40);
  DistributionFamily family;
  std::vector<Eigen::VectorXd> raw;
  for (int i = 0; i < 3; ++i) {
    family.members.push_back(testutil::random_distribution(n, rng));
    raw.push_back(family.members.back().weights);
  }
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
  const auto res = sinkhorn_barycenter(filter, family, a, {400, 1e-8});
  REQUIRE(res.converged);

  const Eigen::VectorXd oracle = dense_barycenter_oracle(
      exact_heat_oracle(lap, t), raw, Eigen::VectorXd::Constant(3, 1.0 / 3), a, 400, 1e-8);
  CHECK((res.barycenter.weights - oracle).lpNorm<1>() <= 1e-5);
}

TEST_CASE("barycenter normalisation and marginal audit") {
  Rng rng(11);
  const int n = 40;
  const auto lap = laplacian(testutil::random_connected_graph(n, 12), LaplacianKind::normalized);
  const HeatFilter filter(lap, 0.6, 30);
  DistributionFamily family;
  for (int i = 0; i < 3; ++i) family.members.push_back(testutil::random_distribution(n, rng));
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
  const double tol = 5e-7;
  const auto res = sinkhorn_barycenter(filter, family, a, {2000, tol});
  REQUIRE(res.converged);
  CHECK(std::abs(res.barycenter.weights.sum() - 1.0) <= 1e-12);
  CHECK(res.barycenter.weights.minCoeff() >= 0.0);
  REQUIRE(res.scalings.size() == 3);

  // Member plans diag(v_i) H diag(a w_i): rows rebuild mu_i, columns rebuild
  // the shared barycenter.
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& [v, w] = res.scalings[i];
    const Eigen::VectorXd row_sums = v.cwiseProduct(filter.apply(a.cwiseProduct(w)));
    CHECK((row_sums - family.members[i].weights).lpNorm<1>() <= 1e-6);
    const Eigen::VectorXd col_sums = a.cwiseProduct(w).cwiseProduct(filter.apply(v));
    CHECK((col_sums - res.barycenter.weights).lpNorm<1>() <= 1e-6);
  }
}

TEST_CASE("barycentric distance is symmetric and finite on identical families") {
  Rng rng(13);
  const int n = 30;
  const auto lap = laplacian(testutil::random_connected_graph(n, 14), LaplacianKind::normalized);
  const HeatFilter filter(lap, 0.7, 30);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);

  DistributionFamily t_family, c_family;
  for (int i = 0; i < 2; ++i) {
    t_family.members.push_back(testutil::random_distribution(n, rng));
    c_family.members.push_back(testutil::random_distribution(n, rng));
  }
  const double tc = barycentric_distance(filter, t_family, c_family, a, {500, 1e-8});
  const double ct = barycentric_distance(filter, c_family, t_family, a, {500, 1e-8});
  CHECK(std::abs(tc - ct) <= 1e-8 * (1.0 + std::abs(tc)));

  const double self = barycentric_distance(filter, t_family, t_family, a, {500, 1e-8});
  CHECK(std::isfinite(self));
}

TEST_CASE("separated synthetic families are farther apart than replicates") {
  // Two tight clusters on a path graph; families living on opposite clusters
  // must be farther apart than two replicate families on the same cluster.
  const int n = 30;
  const auto lap = laplacian(testutil::path_graph(n), LaplacianKind::combinatorial);
  const HeatFilter filter(lap, 2.0, 60);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);

  auto family_around = [&](int base, int shift) {
    DistributionFamily fam;
    fam.members.push_back(Distribution::indicator(n, {base, base + 1, base + 2}));
    fam.members.push_back(Distribution::indicator(n, {base + shift, base + 1 + shift}));
    return fam;
  };
  const auto left_a = family_around(2, 1);
  const auto left_b = family_around(3, 1);
  const auto right = family_around(24, 1);

  const double across = barycentric_distance(filter, left_a, right, a, {800, 1e-8});
  const double within = barycentric_distance(filter, left_a, left_b, a, {800, 1e-8});
  CHECK(across > within);
}

TEST_CASE("identical families give a zero expected barycenter effect") {
  Rng rng(17);
  const int n = 24;
  const auto lap = laplacian(testutil::random_connected_graph(n, 18), LaplacianKind::normalized);
  const HeatFilter filter(lap, 0.5, 25);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
  DistributionFamily fam;
  for (int i = 0; i < 2; ++i) fam.members.push_back(testutil::random_distribution(n, rng));
  Eigen::MatrixXd features(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) features(i, j) = rng.normal();

  const Eigen::VectorXd tau = expected_barycenter_effect(filter, fam, fam, features, a, {300, 1e-8});
  CHECK(tau.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(tv_baseline_effect(fam, fam, features).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("tv baseline equals the difference of mixture means") {
  const int n = 6;
  Eigen::MatrixXd features(n, 1);
  features << 0, 1, 2, 3, 4, 5;
  DistributionFamily t_family, c_family;
  t_family.members.push_back(Distribution::indicator(n, {4}));
  t_family.members.push_back(Distribution::indicator(n, {5}));
  c_family.members.push_back(Distribution::indicator(n, {0}));
  c_family.members.push_back(Distribution::indicator(n, {1}));
  const Eigen::VectorXd tau = tv_baseline_effect(t_family, c_family, features);
  CHECK(tau(0) == doctest::Approx(4.5 - 0.5).epsilon(1e-14));
}

TEST_CASE("family validation") {
  DistributionFamily fam;
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(4, 0.25);
  const auto lap = laplacian(testutil::path_graph(4), LaplacianKind::combinatorial);
  const HeatFilter filter(lap, 0.5, 10);
  CHECK_THROWS_AS(sinkhorn_barycenter(filter, fam, a, {100, 1e-6}), Error);

  fam.members.push_back(Distribution::uniform(4));
  fam.alphas = Eigen::Vector2d(0.5, 0.5);  // wrong arity
  CHECK_THROWS_AS(sinkhorn_barycenter(filter, fam, a, {100, 1e-6}), Error);
}
