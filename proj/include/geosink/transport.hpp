#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "geosink/heat.hpp"
#include "geosink/pointcloud.hpp"

namespace geosink {

// Non-negative vertex signal summing to one.
struct Distribution {
  Eigen::VectorXd weights;

  Distribution() = default;
  explicit Distribution(Eigen::VectorXd w) : weights(std::move(w)) { validate(); }

  static Distribution uniform(int n);
  static Distribution indicator(int n, const std::vector<int>& vertices);
  static Distribution from_weights(Eigen::VectorXd w);  // normalises

  Eigen::Index size() const { return weights.size(); }
  void validate() const;
};

struct SinkhornParams {
  int max_iter = 500;
  double tol = 1e-6;  // L1 marginal error
};

struct TransportResult {
  Eigen::VectorXd v, w;
  double cost = 0.0;    // heat runs: 4t sum[a (mu ln v + nu ln w)]; dense runs: <plan, C>
  double kl = 0.0;      // D_KL(plan | kernel) at the returned scalings
  double lambda = 0.0;  // regularisation; 4t for heat-kernel runs
  int iterations = 0;
  bool converged = false;
  double marginal_error = std::numeric_limits<double>::infinity();

  // lambda^{1/2} (1 + KL)^{1/2}
  double kl_form_cost() const { return std::sqrt(lambda * std::max(0.0, 1.0 + kl)); }
  // 4 t^{1/2} (1 + KL)^{1/2} with t = lambda / 4
  double normalized_cost() const { return 2.0 * kl_form_cost(); }
  // lambda (1 + KL); equals `cost` for heat runs with unit vertex weights
  double dual_cost() const { return lambda * (1.0 + kl); }
};

// Entropy-regularised transport between mu and nu where the Gibbs kernel is
// the heat filter: alternating updates
//   v <- mu ./ p_K(a .* w),   w <- nu ./ p_K(a .* v)
// until the L1 marginal error drops below tol. Filter outputs more negative
// than -1e-12 |input|_inf raise KernelNotPositive; smaller values are floored
// at 1e-300 before dividing. A marginal error stuck above 0.5 for 50 sweeps
// raises Disconnected.
TransportResult geodesic_sinkhorn(const HeatFilter& filter, const Distribution& mu,
                                  const Distribution& nu, const Eigen::VectorXd& a,
                                  const SinkhornParams& params = {});

// Many pairs against one shared filter; each sweep applies the filter to all
// unconverged pairs at once. Results are identical to per-pair runs up to
// floating-point reassociation.
std::vector<TransportResult> geodesic_sinkhorn_batch(const HeatFilter& filter,
                                                     const std::vector<Distribution>& mus,
                                                     const std::vector<Distribution>& nus,
                                                     const Eigen::VectorXd& a,
                                                     const SinkhornParams& params = {});

// Same updates with the backward-Euler heat approximation as the kernel.
TransportResult euler_sinkhorn(const EulerHeat& euler, const Distribution& mu,
                               const Distribution& nu, const Eigen::VectorXd& a,
                               const SinkhornParams& params = {});

std::vector<TransportResult> euler_sinkhorn_batch(const EulerHeat& euler,
                                                  const std::vector<Distribution>& mus,
                                                  const std::vector<Distribution>& nus,
                                                  const Eigen::VectorXd& a,
                                                  const SinkhornParams& params = {});

// Classical Sinkhorn on the dense Gibbs kernel exp(-C / lambda). `cost` is
// the primal transport cost of the regularised plan.
TransportResult dense_sinkhorn(const Eigen::MatrixXd& cost_matrix, const Distribution& mu,
                               const Distribution& nu, double lambda,
                               const SinkhornParams& params = {});

// Row i of diag(v) H_t diag(a .* w) through one filter application to the
// unit impulse e_i, clamped at zero.
Eigen::VectorXd plan_row(const TransportResult& result, const HeatFilter& filter,
                         const Eigen::VectorXd& a, int i);

// Displacement interpolation: draws (i, j) with probability plan_ij and
// emits (1-s) x_i + s y_j. `plan_row_fn(i)` must return the i-th plan row
// over the target points; it is called at most twice per source index.
PointCloud mccann_interpolate(const PointCloud& source, const PointCloud& target,
                              const std::function<Eigen::VectorXd(int)>& plan_row_fn, double s,
                              int num_samples, std::uint64_t rng_seed);

// Exact 2-Wasserstein distance between equal-size uniform point sets:
// assignment problem on squared Euclidean costs (shortest augmenting paths),
// then the square root of the mean matched cost. Evaluation metric only.
double exact_w2(const PointCloud& x, const PointCloud& y);

// Minimum-cost perfect matching value for a square cost matrix.
double solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace geosink
