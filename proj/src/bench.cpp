#include "geosink/bench.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "geosink/rng.hpp"

namespace geosink {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::vector<int>> group_by_label(const std::vector<int>& labels, int groups) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(groups));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int g = labels[i];
    require(g >= 0 && g < groups, errc::index_out_of_range, "label out of range");
    out[static_cast<std::size_t>(g)].push_back(static_cast<int>(i));
  }
  return out;
}

// Squared Euclidean distances between two row sets via the Gram identity.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::VectorXd xn = x.rowwise().squaredNorm();
  const Eigen::VectorXd yn = y.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * x * y.transpose();
  d.colwise() += xn;
  d.rowwise() += yn.transpose();
  return d.cwiseMax(0.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

Eigen::MatrixXd random_rotation(int dim, Rng& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

SwissRollSample make_swiss_roll(int n_distributions, int samples_per_dist, double noise_sigma,
                                int ambient_dim, std::uint64_t seed) {
  require(n_distributions >= 1 && samples_per_dist >= 1, errc::invalid_argument,
          "need at least one distribution and one sample");
  require(ambient_dim >= 3, errc::invalid_argument, "ambient dimension must be >= 3");
  require(noise_sigma >= 0.0, errc::invalid_argument, "noise sigma must be >= 0");

  const double pi = M_PI;
  Rng rng(seed);

  SwissRollSample sample;
  sample.n_distributions = n_distributions;
  sample.centers.resize(n_distributions, 2);
  for (int c = 0; c < n_distributions; ++c) {
    sample.centers(c, 0) = rng.uniform(1.5 * pi, 4.5 * pi);
    sample.centers(c, 1) = rng.uniform(0.0, 20.0);
  }

  const int n = n_distributions * samples_per_dist;
  sample.intrinsic.resize(n, 2);
  sample.labels.resize(static_cast<std::size_t>(n));
  Eigen::MatrixXd flat(n, 3);
  int row = 0;
  for (int c = 0; c < n_distributions; ++c) {
    for (int q = 0; q < samples_per_dist; ++q, ++row) {
      const double s = sample.centers(c, 0) + noise_sigma * rng.normal();
      const double h = sample.centers(c, 1) + noise_sigma * rng.normal();
      sample.intrinsic(row, 0) = s;
      sample.intrinsic(row, 1) = h;
      sample.labels[static_cast<std::size_t>(row)] = c;
      flat(row, 0) = s * std::cos(s);
      flat(row, 1) = h;
      flat(row, 2) = s * std::sin(s);
    }
  }

  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(n, ambient_dim);
  padded.leftCols(3) = flat;
  const Eigen::MatrixXd rotation = random_rotation(ambient_dim, rng);
  sample.ambient = padded * rotation.transpose();
  return sample;
}

double spiral_arclength(double s) { return 0.5 * (s * std::sqrt(1.0 + s * s) + std::asinh(s)); }

Eigen::MatrixXd ground_truth_distances(const SwissRollSample& sample) {
  const int m = sample.n_distributions;
  require(sample.centers.rows() == m && sample.centers.cols() == 2, errc::invalid_argument,
          "sample is missing intrinsic centres");
  Eigen::MatrixXd unrolled(m, 2);
  for (int c = 0; c < m; ++c) {
    unrolled(c, 0) = spiral_arclength(sample.centers(c, 0));
    unrolled(c, 1) = sample.centers(c, 1);
  }
  Eigen::MatrixXd d(m, m);
  for (int i = 0; i < m; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < m; ++j) {
      const double dist = (unrolled.row(i) - unrolled.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Rank metrics
// ---------------------------------------------------------------------------

Eigen::VectorXd average_ranks(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) != values(b) ? values(a) < values(b) : a < b;
  });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values(order[static_cast<std::size_t>(j + 1)]) == values(order[static_cast<std::size_t>(i)])) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (Eigen::Index q = i; q <= j; ++q) ranks(order[static_cast<std::size_t>(q)]) = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require(x.size() == y.size() && x.size() >= 2, errc::size_mismatch, "correlation inputs");
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double denom = xc.norm() * yc.norm();
  require(denom > 0.0, errc::degenerate_input, "constant input has no correlation");
  return xc.dot(yc) / denom;
}

double spearman_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return pearson_correlation(average_ranks(x), average_ranks(y));
}

BenchmarkReport rank_metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
  const Eigen::Index m = predicted.rows();
  require(predicted.cols() == m && truth.rows() == m && truth.cols() == m, errc::size_mismatch,
          "rank metrics need square matrices of equal shape");
  require(m >= 3, errc::degenerate_input, "need at least three distributions");
  const double scale = 1.0 + std::max(predicted.cwiseAbs().maxCoeff(), truth.cwiseAbs().maxCoeff());
  require((predicted - predicted.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          errc::invalid_argument, "predicted matrix is not symmetric");
  require((truth - truth.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          errc::invalid_argument, "truth matrix is not symmetric");

  const Eigen::Index pairs = m * (m - 1) / 2;
  Eigen::VectorXd up(pairs), ut(pairs);
  Eigen::Index q = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j, ++q) {
      up(q) = predicted(i, j);
      ut(q) = truth(i, j);
    }

  BenchmarkReport report;
  report.pearson = pearson_correlation(up, ut);
  report.spearman = spearman_correlation(up, ut);

  // Row-wise k-NN precision, diagonal excluded, ties to the lower index.
  const int k = static_cast<int>(std::min<Eigen::Index>(5, m - 1));
  auto row_knn = [&](const Eigen::MatrixXd& mat, Eigen::Index i) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(m) - 1);
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) idx.push_back(j);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      return mat(i, a) != mat(i, b) ? mat(i, a) < mat(i, b) : a < b;
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
  };
  double hits = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto p5 = row_knn(predicted, i);
    const auto t5 = row_knn(truth, i);
    for (Eigen::Index a : p5)
      if (std::find(t5.begin(), t5.end(), a) != t5.end()) hits += 1.0;
  }
  report.p_at_5 = hits / (static_cast<double>(m) * k);
  return report;
}

// ---------------------------------------------------------------------------
// KNN benchmark
// ---------------------------------------------------------------------------

const char* to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::geodesic_sinkhorn: return "geodesic_sinkhorn";
    case BenchMethod::dense_sinkhorn_w1: return "dense_sinkhorn_w1";
    case BenchMethod::dense_sinkhorn_w2: return "dense_sinkhorn_w2";
    case BenchMethod::euler_sinkhorn: return "euler_sinkhorn";
  }
  return "unknown";
}

BenchMethod bench_method_from_string(const std::string& s) {
  if (s == "geodesic_sinkhorn" || s == "geodesic") return BenchMethod::geodesic_sinkhorn;
  if (s == "dense_sinkhorn_w1" || s == "dense_w1") return BenchMethod::dense_sinkhorn_w1;
  if (s == "dense_sinkhorn_w2" || s == "dense_w2") return BenchMethod::dense_sinkhorn_w2;
  if (s == "euler_sinkhorn" || s == "euler") return BenchMethod::euler_sinkhorn;
  fail(errc::invalid_argument, "unknown benchmark method '" + s + "'");
}

namespace {

Eigen::MatrixXd pair_matrix_from_costs(int m, const std::vector<double>& costs) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  int q = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j, ++q) {
      d(i, j) = costs[static_cast<std::size_t>(q)];
      d(j, i) = costs[static_cast<std::size_t>(q)];
    }
  return d;
}

}  // namespace

KnnBenchResult knn_benchmark(const KnnBenchConfig& config) {
  require(config.n_distributions >= 3, errc::invalid_argument, "need at least three distributions");
  require(!config.methods.empty(), errc::invalid_argument, "no methods requested");
  require(!config.seeds.empty(), errc::invalid_argument, "no seeds requested");

  const int m = config.n_distributions;
  KnnBenchResult result;

  for (std::uint64_t seed : config.seeds) {
    KnnSeedResult seed_result;
    seed_result.seed = seed;

    const SwissRollSample sample = make_swiss_roll(m, config.samples_per_dist, config.noise_sigma,
                                                   config.ambient_dim, seed);
    seed_result.truth = ground_truth_distances(sample);
    const auto groups = group_by_label(sample.labels, m);
    const int n = static_cast<int>(sample.ambient.rows());

    const bool needs_graph =
        std::any_of(config.methods.begin(), config.methods.end(), [](BenchMethod mm) {
          return mm == BenchMethod::geodesic_sinkhorn || mm == BenchMethod::euler_sinkhorn;
        });

    GraphLaplacian lap;
    double graph_seconds = 0.0;
    if (needs_graph) {
      const auto t0 = Clock::now();
      lap = laplacian(knn_alpha_decay_graph(sample.cloud(), config.k, config.alpha), config.kind);
      graph_seconds = seconds_since(t0);
    }

    std::vector<Distribution> mus, nus;
    mus.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    nus.reserve(mus.capacity());
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        mus.push_back(Distribution::indicator(n, groups[static_cast<std::size_t>(i)]));
        nus.push_back(Distribution::indicator(n, groups[static_cast<std::size_t>(j)]));
      }
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);

    for (BenchMethod method : config.methods) {
      BenchmarkReport report;
      std::vector<double> costs;

      if (method == BenchMethod::geodesic_sinkhorn || method == BenchMethod::euler_sinkhorn) {
        const auto t_prep = Clock::now();
        std::vector<TransportResult> runs;
        if (method == BenchMethod::geodesic_sinkhorn) {
          const HeatFilter filter(lap, config.t, config.degree);
          report.wall_times["prepare"] = seconds_since(t_prep);
          const auto t_dist = Clock::now();
          runs = geodesic_sinkhorn_batch(filter, mus, nus, a, config.sinkhorn);
          report.wall_times["distance"] = seconds_since(t_dist);
        } else {
          const EulerHeat euler(lap, config.t, config.euler_steps);
          report.wall_times["prepare"] = seconds_since(t_prep);
          const auto t_dist = Clock::now();
          runs = euler_sinkhorn_batch(euler, mus, nus, a, config.sinkhorn);
          report.wall_times["distance"] = seconds_since(t_dist);
        }
        costs.reserve(runs.size());
        for (const auto& r : runs) costs.push_back(r.cost);
        report.wall_times["graph"] = graph_seconds;
      } else {
        const bool squared = method == BenchMethod::dense_sinkhorn_w2;
        const double lambda = squared ? config.lambda_w2 : config.lambda_w1;
        const auto t_dist = Clock::now();
        for (int i = 0; i < m; ++i) {
          Eigen::MatrixXd xi(static_cast<Eigen::Index>(groups[static_cast<std::size_t>(i)].size()),
                             sample.ambient.cols());
          for (std::size_t r = 0; r < groups[static_cast<std::size_t>(i)].size(); ++r)
            xi.row(static_cast<Eigen::Index>(r)) =
                sample.ambient.row(groups[static_cast<std::size_t>(i)][r]);
          for (int j = i + 1; j < m; ++j) {
            Eigen::MatrixXd xj(static_cast<Eigen::Index>(groups[static_cast<std::size_t>(j)].size()),
                               sample.ambient.cols());
            for (std::size_t r = 0; r < groups[static_cast<std::size_t>(j)].size(); ++r)
              xj.row(static_cast<Eigen::Index>(r)) =
                  sample.ambient.row(groups[static_cast<std::size_t>(j)][r]);
            Eigen::MatrixXd cost = squared_distances(xi, xj);
            if (!squared) cost = cost.cwiseSqrt();
            const auto run = dense_sinkhorn(
                cost, Distribution::uniform(static_cast<int>(cost.rows())),
                Distribution::uniform(static_cast<int>(cost.cols())), lambda, config.sinkhorn);
            costs.push_back(squared ? std::sqrt(std::max(0.0, run.cost)) : run.cost);
          }
        }
        report.wall_times["distance"] = seconds_since(t_dist);
        report.wall_times["prepare"] = 0.0;
        report.wall_times["graph"] = 0.0;
      }

      report.wall_times["total"] = report.wall_times["graph"] + report.wall_times["prepare"] +
                                   report.wall_times["distance"];
      const Eigen::MatrixXd d = pair_matrix_from_costs(m, costs);
      const BenchmarkReport metrics = rank_metrics(d, seed_result.truth);
      report.spearman = metrics.spearman;
      report.pearson = metrics.pearson;
      report.p_at_5 = metrics.p_at_5;
      seed_result.distances[to_string(method)] = d;
      seed_result.reports[to_string(method)] = report;
    }
    result.per_seed.push_back(std::move(seed_result));
  }

  // Average metrics and times over seeds.
  for (BenchMethod method : config.methods) {
    const std::string name = to_string(method);
    BenchmarkReport mean;
    for (const auto& sr : result.per_seed) {
      const auto& r = sr.reports.at(name);
      mean.spearman += r.spearman;
      mean.pearson += r.pearson;
      mean.p_at_5 += r.p_at_5;
      for (const auto& [phase, secs] : r.wall_times) mean.wall_times[phase] += secs;
    }
    const double count = static_cast<double>(result.per_seed.size());
    mean.spearman /= count;
    mean.pearson /= count;
    mean.p_at_5 /= count;
    for (auto& [phase, secs] : mean.wall_times) secs /= count;
    result.mean_report[name] = mean;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Time-series interpolation benchmark
// ---------------------------------------------------------------------------

std::vector<PointCloud> make_time_series(const TimeSeriesConfig& config, std::uint64_t seed) {
  require(config.timepoints >= 3, errc::invalid_argument, "need at least three timepoints");
  require(config.samples_per_time >= 2, errc::invalid_argument, "need at least two samples");
  Rng rng(seed);
  std::vector<PointCloud> series;
  series.reserve(static_cast<std::size_t>(config.timepoints));
  for (int tp = 0; tp < config.timepoints; ++tp) {
    const double center = config.s_start + tp * config.s_step;
    Eigen::MatrixXd pts(config.samples_per_time, 3);
    for (int q = 0; q < config.samples_per_time; ++q) {
      const double s = center + config.sigma_s * rng.normal();
      const double h = config.h_center + config.sigma_h * rng.normal();
      if (config.flat) {
        // Straight line with matched arc length: zero curvature control.
        pts(q, 0) = spiral_arclength(s);
        pts(q, 1) = h;
        pts(q, 2) = 0.0;
      } else {
        pts(q, 0) = s * std::cos(s);
        pts(q, 1) = h;
        pts(q, 2) = s * std::sin(s);
      }
    }
    series.emplace_back(std::move(pts));
  }
  return series;
}

InterpResult interpolation_benchmark(const TimeSeriesConfig& config) {
  require(!config.seeds.empty(), errc::invalid_argument, "no seeds requested");
  InterpResult result;
  const int m = config.samples_per_time;

  for (std::uint64_t seed : config.seeds) {
    InterpSeedResult seed_result;
    seed_result.seed = seed;
    const auto series = make_time_series(config, seed);

    for (int held = 1; held + 1 < config.timepoints; ++held) {
      const PointCloud& src = series[static_cast<std::size_t>(held - 1)];
      const PointCloud& tgt = series[static_cast<std::size_t>(held + 1)];
      const PointCloud& truth = series[static_cast<std::size_t>(held)];
      const std::uint64_t interp_seed = Rng::seed_mix(seed, static_cast<std::uint64_t>(held));

      // Heat-geodesic plan on the merged graph.
      {
        Eigen::MatrixXd merged(2 * m, src.dim());
        merged.topRows(m) = src.points;
        merged.bottomRows(m) = tgt.points;
        const PointCloud merged_cloud(std::move(merged));
        const GraphLaplacian lap =
            laplacian(knn_alpha_decay_graph(merged_cloud, config.k, config.alpha), config.kind);
        const HeatFilter filter(lap, config.t, config.degree);

        std::vector<int> src_idx(static_cast<std::size_t>(m)), tgt_idx(static_cast<std::size_t>(m));
        std::iota(src_idx.begin(), src_idx.end(), 0);
        std::iota(tgt_idx.begin(), tgt_idx.end(), m);
        const Eigen::VectorXd a = Eigen::VectorXd::Constant(2 * m, 1.0 / (2 * m));
        const auto run = geodesic_sinkhorn(filter, Distribution::indicator(2 * m, src_idx),
                                           Distribution::indicator(2 * m, tgt_idx), a,
                                           config.sinkhorn);

        // Materialise the src x tgt block of the plan: impulses at target
        // vertices give the needed kernel columns in one batched pass.
        RowMajorXd impulses = RowMajorXd::Zero(2 * m, m);
        for (int j = 0; j < m; ++j) impulses(m + j, j) = 1.0;
        RowMajorXd columns;
        filter.apply(impulses, columns);
        Eigen::MatrixXd plan(m, m);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            plan(i, j) = std::max(0.0, run.v(i) * columns(i, j) * a(m + j) * run.w(m + j));

        const PointCloud interp = mccann_interpolate(
            src, tgt, [&](int i) { return Eigen::VectorXd(plan.row(i)); }, 0.5, m, interp_seed);
        seed_result.scores["geodesic_sinkhorn"].push_back(exact_w2(interp, truth));
      }

      // Euclidean dense-Sinkhorn plan.
      {
        const Eigen::MatrixXd cost = squared_distances(src.points, tgt.points);
        const auto run = dense_sinkhorn(cost, Distribution::uniform(m), Distribution::uniform(m),
                                        config.lambda_dense, config.sinkhorn);
        const Eigen::MatrixXd kernel = (-cost / config.lambda_dense).array().exp();
        Eigen::MatrixXd plan = run.v.asDiagonal() * kernel * run.w.asDiagonal();
        const PointCloud interp = mccann_interpolate(
            src, tgt, [&](int i) { return Eigen::VectorXd(plan.row(i)); }, 0.5, m, interp_seed);
        seed_result.scores["dense_sinkhorn_w2"].push_back(exact_w2(interp, truth));
      }
    }
    result.per_seed.push_back(std::move(seed_result));
  }

  for (const auto& sr : result.per_seed)
    for (const auto& [name, scores] : sr.scores)
      for (double s : scores) result.mean_score[name] += s;
  const double denom =
      static_cast<double>(result.per_seed.size() * static_cast<std::size_t>(config.timepoints - 2));
  for (auto& [name, s] : result.mean_score) s /= denom;
  return result;
}

// ---------------------------------------------------------------------------
// Expected-barycenter-effect experiment
// ---------------------------------------------------------------------------

EbeResult ebe_experiment(const EbeConfig& config) {
  require(config.control_members >= 1 && config.treated_members >= 1, errc::invalid_argument,
          "need at least one member per family");
  require(config.samples_per_member >= 2, errc::invalid_argument, "need at least two samples");
  require(config.dim >= 1, errc::invalid_argument, "dimension must be >= 1");
  require(!config.has_outlier || config.treated_members >= 2, errc::invalid_argument,
          "outlier needs at least two treated members");

  Rng rng(config.seed);
  const int per = config.samples_per_member;
  const int members_total = config.control_members + config.treated_members;
  const int n = members_total * per;

  Eigen::MatrixXd points(n, config.dim);
  auto fill_member = [&](int member, double mean_shift) {
    for (int q = 0; q < per; ++q) {
      const int row = member * per + q;
      for (int d = 0; d < config.dim; ++d)
        points(row, d) = (d == 0 ? mean_shift : 0.0) + rng.normal();
    }
  };

  int member = 0;
  for (int c = 0; c < config.control_members; ++c) fill_member(member++, 0.0);
  const int clean_treated = config.treated_members - (config.has_outlier ? 1 : 0);
  for (int c = 0; c < clean_treated; ++c) fill_member(member++, config.treatment_shift);
  if (config.has_outlier) fill_member(member++, config.outlier_mean);

  const PointCloud cloud(points);
  const GraphLaplacian lap =
      laplacian(knn_alpha_decay_graph(cloud, config.k, config.alpha), config.kind);
  const HeatFilter filter(lap, config.t, config.degree);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);

  auto member_indicator = [&](int idx) {
    std::vector<int> rows(static_cast<std::size_t>(per));
    std::iota(rows.begin(), rows.end(), idx * per);
    return Distribution::indicator(n, rows);
  };

  DistributionFamily control, treated;
  control.label = "control";
  treated.label = "treated";
  for (int c = 0; c < config.control_members; ++c) control.members.push_back(member_indicator(c));
  for (int c = config.control_members; c < members_total; ++c)
    treated.members.push_back(member_indicator(c));

  const auto bary_t = sinkhorn_barycenter(filter, treated, a, config.sinkhorn);
  const auto bary_c = sinkhorn_barycenter(filter, control, a, config.sinkhorn);

  EbeResult result;
  result.graph_size = n;
  result.converged_treated = bary_t.converged;
  result.converged_control = bary_c.converged;
  result.tau = points.transpose() * (bary_t.barycenter.weights - bary_c.barycenter.weights);
  result.tau_tv = tv_baseline_effect(treated, control, points);
  return result;
}

}  // namespace geosink
