#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "geosink/bench.hpp"
#include "test_util.hpp"

using namespace geosink;

TEST_CASE("swiss roll generation is deterministic and label-complete") {
  const auto a = make_swiss_roll(4, 50, 0.5, 5, 42);
  const auto b = make_swiss_roll(4, 50, 0.5, 5, 42);
  CHECK((a.ambient - b.ambient).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.centers - b.centers).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.labels == b.labels);
  CHECK(a.ambient.rows() == 200);
  CHECK(a.ambient.cols() == 5);
  CHECK(a.intrinsic.rows() == 200);

  std::vector<int> counts(4, 0);
  for (int lbl : a.labels) ++counts[static_cast<std::size_t>(lbl)];
  for (int c : counts) CHECK(c == 50);

  const auto c = make_swiss_roll(4, 50, 0.5, 5, 43);
  CHECK((a.ambient - c.ambient).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("rotation into the ambient space preserves pairwise distances") {
  const auto sample = make_swiss_roll(3, 40, 0.6, 10, 7);
  Eigen::MatrixXd flat(sample.intrinsic.rows(), 3);
  for (Eigen::Index i = 0; i < flat.rows(); ++i) {
    const double s = sample.intrinsic(i, 0);
    flat(i, 0) = s * std::cos(s);
    flat(i, 1) = sample.intrinsic(i, 1);
    flat(i, 2) = s * std::sin(s);
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(flat.rows())));
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(flat.rows())));
    const double before = (flat.row(i) - flat.row(j)).norm();
    const double after = (sample.ambient.row(i) - sample.ambient.row(j)).norm();
    CHECK(std::abs(before - after) <= 1e-9 * (1.0 + before));
  }
}

TEST_CASE("zero noise collapses each distribution to one ambient point") {
  const auto sample = make_swiss_roll(3, 20, 0.0, 4, 9);
  for (int c = 0; c < 3; ++c) {
    const Eigen::Index base = c * 20;
    for (int q = 1; q < 20; ++q)
      CHECK((sample.ambient.row(base + q) - sample.ambient.row(base)).norm() <= 1e-12);
  }
}

TEST_CASE("ground truth distances use unrolled coordinates") {
  SwissRollSample sample;
  sample.n_distributions = 3;
  sample.centers.resize(3, 2);
  const double pi = M_PI;
  sample.centers << pi, 3.0, pi, 7.0, 2.0 * pi, 3.0;
  const Eigen::MatrixXd d = ground_truth_distances(sample);
  CHECK(d(0, 0) == 0.0);
  // Same arc position, heights differ by 4: the cylinder direction is flat.
  CHECK(d(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
  // Arc positions pi vs 2 pi at equal height: difference of arclengths.
  const double expected = spiral_arclength(2.0 * pi) - spiral_arclength(pi);
  CHECK(d(0, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spiral arclength agrees with numerical quadrature") {
  // Simpson's rule on sqrt(1 + u^2).
  auto quad = [](double s) {
    const int steps = 20000;
    const double h = s / steps;
    double acc = std::sqrt(1.0) + std::sqrt(1.0 + s * s);
    for (int i = 1; i < steps; ++i) {
      const double u = i * h;
      acc += (i % 2 ? 4.0 : 2.0) * std::sqrt(1.0 + u * u);
    }
    return acc * h / 3.0;
  };
  for (double s : {0.5, 2.0, M_PI, 10.0}) {
    CHECK(spiral_arclength(s) == doctest::Approx(quad(s)).epsilon(1e-9));
  }
}

TEST_CASE("ground truth satisfies metric axioms on random samples") {
  const auto sample = make_swiss_roll(8, 2, 0.1, 3, 12);
  const Eigen::MatrixXd d = ground_truth_distances(sample);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int i = static_cast<int>(rng.below(8));
    const int j = static_cast<int>(rng.below(8));
    const int k = static_cast<int>(rng.below(8));
    CHECK(d(i, j) == d(j, i));
    CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-9);
  }
}

TEST_CASE("average ranks share tie ranks") {
  Eigen::VectorXd v(4);
  v << 1.0, 2.0, 2.0, 3.0;
  const Eigen::VectorXd r = average_ranks(v);
  CHECK(r(0) == 1.0);
  CHECK(r(1) == 2.5);
  CHECK(r(2) == 2.5);
  CHECK(r(3) == 4.0);
}

TEST_CASE("perfect and reversed predictions bracket the rank metrics") {
  const auto sample = make_swiss_roll(6, 2, 0.2, 3, 21);
  const Eigen::MatrixXd truth = ground_truth_distances(sample);
  const auto perfect = rank_metrics(truth, truth);
  CHECK(perfect.spearman == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(perfect.pearson == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(perfect.p_at_5 == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd reversed = truth.maxCoeff() - truth.array();
  reversed.diagonal().setZero();
  const auto worst = rank_metrics(reversed, truth);
  CHECK(worst.spearman == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(worst.pearson == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("hand-built four-by-four matrices with one swapped pair") {
  // Upper triangles: truth 1..6, prediction swaps the first two entries.
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(4, 4);
  const double tvals[6] = {1, 2, 3, 4, 5, 6};
  const double pvals[6] = {2, 1, 3, 4, 5, 6};
  int q = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j, ++q) {
      truth(i, j) = truth(j, i) = tvals[q];
      pred(i, j) = pred(j, i) = pvals[q];
    }
  const auto rep = rank_metrics(pred, truth);
  // Spearman with two swapped adjacent ranks: 1 - 6*2/(6*35).
  CHECK(rep.spearman == doctest::Approx(1.0 - 12.0 / 210.0).epsilon(1e-12));
  // Pearson computed directly on the raw upper triangles.
  Eigen::VectorXd x(6), y(6);
  for (int i = 0; i < 6; ++i) {
    x(i) = pvals[i];
    y(i) = tvals[i];
  }
  CHECK(rep.pearson == doctest::Approx(pearson_correlation(x, y)).epsilon(1e-12));
}

TEST_CASE("constant matrices are rejected as degenerate") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Ones(4, 4);
  truth.diagonal().setZero();
  try {
    rank_metrics(truth, truth);
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == errc::degenerate_input);
  }
}

TEST_CASE("tiny knn benchmark produces symmetric matrices and reports") {
  KnnBenchConfig config;
  config.n_distributions = 8;
  config.samples_per_dist = 150;
  config.noise_sigma = 4.0;  // tails must bridge the clusters at this scale
  config.ambient_dim = 3;
  config.seeds = {5};
  config.methods = {BenchMethod::geodesic_sinkhorn, BenchMethod::dense_sinkhorn_w2,
                    BenchMethod::euler_sinkhorn};
  config.k = 5;
  config.t = 10.0;
  config.degree = 64;
  config.euler_steps = 10;
  config.sinkhorn = {400, 1e-6};

  const auto res = knn_benchmark(config);
  REQUIRE(res.per_seed.size() == 1);
  for (const auto& [name, d] : res.per_seed[0].distances) {
    CHECK(d.rows() == 8);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.array() >= 0.0 || d.array() < 0.0).all());  // finite
  }
  for (const auto& [name, rep] : res.mean_report) {
    CHECK(rep.wall_times.at("total") >= rep.wall_times.at("distance"));
    CHECK(std::abs(rep.spearman) <= 1.0);
    CHECK(rep.p_at_5 >= 0.0);
    CHECK(rep.p_at_5 <= 1.0);
  }
  CHECK(res.mean_report.count("geodesic_sinkhorn") == 1);
  CHECK(res.mean_report.count("euler_sinkhorn") == 1);
}

TEST_CASE("time series generator shapes and determinism") {
  TimeSeriesConfig config;
  config.timepoints = 3;
  config.samples_per_time = 30;
  const auto a = make_time_series(config, 11);
  const auto b = make_time_series(config, 11);
  REQUIRE(a.size() == 3);
  CHECK((a[0].points - b[0].points).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a[0].size() == 30);
  CHECK(a[0].dim() == 3);

  config.flat = true;
  const auto flat = make_time_series(config, 11);
  for (const auto& cloud : flat) CHECK(cloud.points.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tiny interpolation benchmark returns finite scores for both methods") {
  TimeSeriesConfig config;
  config.timepoints = 3;
  config.samples_per_time = 50;
  config.sigma_s = 1.5;
  config.seeds = {3};
  config.t = 5.0;
  config.degree = 48;
  config.sinkhorn = {400, 1e-6};
  const auto res = interpolation_benchmark(config);
  REQUIRE(res.per_seed.size() == 1);
  REQUIRE(res.mean_score.count("geodesic_sinkhorn") == 1);
  REQUIRE(res.mean_score.count("dense_sinkhorn_w2") == 1);
  for (const auto& [name, score] : res.mean_score) {
    CHECK(std::isfinite(score));
    CHECK(score >= 0.0);
  }
}

TEST_CASE("tiny ebe experiment recovers the shift without an outlier") {
  EbeConfig config;
  config.has_outlier = false;
  config.control_members = 4;
  config.treated_members = 4;
  config.samples_per_member = 60;
  config.seed = 2;
  config.t = 3.0;
  config.degree = 36;
  config.sinkhorn = {50, 1e-6};
  const auto res = ebe_experiment(config);
  CHECK(res.graph_size == 8 * 60);
  CHECK(res.tau.size() == 1);
  CHECK(res.tau(0) == doctest::Approx(5.0).epsilon(0.2));
  CHECK(res.tau_tv(0) == doctest::Approx(5.0).epsilon(0.2));
}

TEST_CASE("method names round trip") {
  for (auto m : {BenchMethod::geodesic_sinkhorn, BenchMethod::dense_sinkhorn_w1,
                 BenchMethod::dense_sinkhorn_w2, BenchMethod::euler_sinkhorn})
    CHECK(bench_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(bench_method_from_string("nope"), Error);
}
