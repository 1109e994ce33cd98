#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geosink/barycenter.hpp"
#include "geosink/graph.hpp"
#include "geosink/rng.hpp"
#include "geosink/transport.hpp"

namespace geosink {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SwissRollSample {
  Eigen::MatrixXd ambient;    // n x D, rotated embedding
  Eigen::MatrixXd intrinsic;  // n x 2, (arc parameter s, height h)
  std::vector<int> labels;    // distribution index per point
  Eigen::MatrixXd centers;    // m x 2 intrinsic centres
  int n_distributions = 0;

  PointCloud cloud() const { return PointCloud(ambient); }
};

// Gaussian clusters in intrinsic (s, h) coordinates with s in [1.5 pi, 4.5 pi]
// and h in [0, 20], mapped through (s cos s, h, s sin s) and embedded by a
// seeded random orthonormal rotation into `ambient_dim` >= 3 dimensions.
SwissRollSample make_swiss_roll(int n_distributions, int samples_per_dist, double noise_sigma,
                                int ambient_dim, std::uint64_t seed);

// Arc length of the spiral r = s: integral of sqrt(1 + u^2) from 0 to s.
double spiral_arclength(double s);

// Pairwise distances between distribution centres in unrolled coordinates
// (arclength(s), h), where the manifold is flat.
Eigen::MatrixXd ground_truth_distances(const SwissRollSample& sample);

// Random orthonormal matrix (QR of a Gaussian matrix with sign-fixed R).
Eigen::MatrixXd random_rotation(int dim, Rng& rng);

// ---------------------------------------------------------------------------
// Rank metrics
// ---------------------------------------------------------------------------

struct BenchmarkReport {
  double spearman = 0.0;
  double pearson = 0.0;
  double p_at_5 = 0.0;
  std::map<std::string, double> wall_times;  // phase -> seconds
};

// Average ranks with ties sharing their mean rank.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& values);
double pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double spearman_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Spearman/Pearson over strict upper triangles plus mean 5-NN precision per
// row (diagonal excluded). Throws DegenerateInput for constant matrices.
BenchmarkReport rank_metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

// ---------------------------------------------------------------------------
// K-nearest-neighbour distribution benchmark
// ---------------------------------------------------------------------------

enum class BenchMethod { geodesic_sinkhorn, dense_sinkhorn_w1, dense_sinkhorn_w2, euler_sinkhorn };

const char* to_string(BenchMethod m);
BenchMethod bench_method_from_string(const std::string& s);

struct KnnBenchConfig {
  int n_distributions = 15;
  int samples_per_dist = 1000;
  double noise_sigma = 3.0;
  int ambient_dim = 10;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<BenchMethod> methods = {BenchMethod::geodesic_sinkhorn,
                                      BenchMethod::dense_sinkhorn_w1,
                                      BenchMethod::dense_sinkhorn_w2};
  int k = 5;
  double alpha = 40.0;
  LaplacianKind kind = LaplacianKind::normalized;
  double t = 20.0;        // heat diffusion time (geodesic + Euler)
  int degree = 100;       // Chebyshev degree
  int euler_steps = 30;   // backward-Euler substeps
  double lambda_w1 = 2.0;  // dense baseline regularisation, distance cost
  double lambda_w2 = 20.0;  // dense baseline regularisation, squared cost
  SinkhornParams sinkhorn{500, 1e-6};
};

struct KnnSeedResult {
  std::uint64_t seed = 0;
  Eigen::MatrixXd truth;
  std::map<std::string, Eigen::MatrixXd> distances;
  std::map<std::string, BenchmarkReport> reports;
};

struct KnnBenchResult {
  std::vector<KnnSeedResult> per_seed;
  std::map<std::string, BenchmarkReport> mean_report;  // metrics and times averaged over seeds
};

KnnBenchResult knn_benchmark(const KnnBenchConfig& config);

// ---------------------------------------------------------------------------
// Time-series interpolation benchmark
// ---------------------------------------------------------------------------

struct TimeSeriesConfig {
  int timepoints = 4;  // >= 3; interior ones are held out
  int samples_per_time = 400;
  double s_start = 7.0;
  double s_step = 2.5;
  double sigma_s = 2.0;
  double h_center = 10.0;
  double sigma_h = 0.25;
  bool flat = false;  // straight-line manifold control
  std::vector<std::uint64_t> seeds = {1};
  int k = 5;
  double alpha = 40.0;
  LaplacianKind kind = LaplacianKind::normalized;
  double t = 10.0;
  int degree = 64;
  double lambda_dense = 4.0;
  SinkhornParams sinkhorn{500, 1e-6};
};

// One point cloud per timepoint, sliding along the spiral (or a line).
std::vector<PointCloud> make_time_series(const TimeSeriesConfig& config, std::uint64_t seed);

struct InterpSeedResult {
  std::uint64_t seed = 0;
  // method -> per-interior-timepoint exact W2 against the held-out cloud
  std::map<std::string, std::vector<double>> scores;
};

struct InterpResult {
  std::vector<InterpSeedResult> per_seed;
  std::map<std::string, double> mean_score;
};

InterpResult interpolation_benchmark(const TimeSeriesConfig& config);

// ---------------------------------------------------------------------------
// Expected-barycenter-effect experiment
// ---------------------------------------------------------------------------

struct EbeConfig {
  bool has_outlier = true;
  double outlier_mean = -60.0;
  double treatment_shift = 5.0;
  int control_members = 10;
  int treated_members = 10;  // the outlier replaces one clean member
  int samples_per_member = 500;
  int dim = 1;
  std::uint64_t seed = 1;
  int k = 5;
  double alpha = 40.0;
  LaplacianKind kind = LaplacianKind::normalized;
  double t = 3.0;
  int degree = 36;
  SinkhornParams sinkhorn{60, 1e-6};
};

struct EbeResult {
  Eigen::VectorXd tau;      // heat-kernel barycenter effect
  Eigen::VectorXd tau_tv;   // total-variation baseline
  bool converged_treated = false;
  bool converged_control = false;
  int graph_size = 0;
};

EbeResult ebe_experiment(const EbeConfig& config);

}  // namespace geosink
