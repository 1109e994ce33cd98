#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "geosink/transport.hpp"

namespace geosink {

struct DistributionFamily {
  std::vector<Distribution> members;
  Eigen::VectorXd alphas;  // empty means uniform
  std::string label;

  Eigen::VectorXd resolved_alphas() const;
  void validate(int n) const;
};

struct BarycenterResult {
  Distribution barycenter;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> scalings;  // (v_i, w_i) per member
  int iterations = 0;
  bool converged = false;
  double marginal_error = std::numeric_limits<double>::infinity();
};

// Fixed-support entropic barycenter by iterative Bregman projections:
//   v_i <- mu_i ./ p_K(a .* w_i)
//   bary <- exp(sum_i alpha_i ln p_K(a .* v_i))      (geometric mean)
//   w_i <- bary ./ p_K(a .* v_i)
// until max_i |v_i .* p_K(a .* w_i) - mu_i|_1 <= tol. The geometric mean is
// taken in log space with a 1e-300 floor, so members with unreachable
// vertices cannot poison the iterate; the barycenter is renormalised to sum
// one on return.
BarycenterResult sinkhorn_barycenter(const HeatFilter& filter, const DistributionFamily& family,
                                     const Eigen::VectorXd& a, const SinkhornParams& params = {});

// Transport cost between the barycenters of two families.
double barycentric_distance(const HeatFilter& filter, const DistributionFamily& family_t,
                            const DistributionFamily& family_c, const Eigen::VectorXd& a,
                            const SinkhornParams& params = {});

// Difference of feature expectations under the two barycenters:
// features^T bary_t - features^T bary_c, evaluated in closed form.
Eigen::VectorXd expected_barycenter_effect(const HeatFilter& filter,
                                           const DistributionFamily& family_t,
                                           const DistributionFamily& family_c,
                                           const Eigen::MatrixXd& features,
                                           const Eigen::VectorXd& a,
                                           const SinkhornParams& params = {});

// Total-variation baseline: the TV barycenter of a family is its alpha
// mixture, so the effect reduces to a difference of mixture means.
Eigen::VectorXd tv_baseline_effect(const DistributionFamily& family_t,
                                   const DistributionFamily& family_c,
                                   const Eigen::MatrixXd& features);

}  // namespace geosink
