#include "geosink/barycenter.hpp"

#include <cmath>

namespace geosink {

namespace {

constexpr double kFloor = 1e-300;
constexpr double kCeil = 1e300;

// Raw filtered signal after the negativity check; callers floor at the
// division and logarithm sites but marginal errors see unfloored values.
void filter_positive(const HeatFilter& filter, const RowMajorXd& in, RowMajorXd& out) {
  filter.apply(in, out);
  const Eigen::RowVectorXd threshold = 1e-12 * in.cwiseAbs().colwise().maxCoeff();
  const Eigen::RowVectorXd mins = out.colwise().minCoeff();
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    require(mins(c) >= -threshold(c), errc::kernel_not_positive,
            "heat filter produced negative mass; increase the Chebyshev degree or diffusion time");
}

}  // namespace

Eigen::VectorXd DistributionFamily::resolved_alphas() const {
  if (alphas.size() == 0)
    return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(members.size()),
                                     1.0 / static_cast<double>(members.size()));
  return alphas;
}

void DistributionFamily::validate(int n) const {
  require(!members.empty(), errc::invalid_argument, "family must be non-empty");
  for (const auto& m : members) {
    m.validate();
    require(m.size() == n, errc::length_mismatch, "family members must share the graph");
  }
  const Eigen::VectorXd al = resolved_alphas();
  require(al.size() == static_cast<Eigen::Index>(members.size()), errc::length_mismatch,
          "one alpha per member required");
  require((al.array() >= 0.0).all(), errc::invalid_argument, "alphas must be non-negative");
  require(std::abs(al.sum() - 1.0) <= 1e-9, errc::invalid_argument, "alphas must sum to 1");
}

BarycenterResult sinkhorn_barycenter(const HeatFilter& filter, const DistributionFamily& family,
                                     const Eigen::VectorXd& a, const SinkhornParams& params) {
  const int n = filter.size();
  family.validate(n);
  require(a.size() == n, errc::length_mismatch, "vertex weights must live on the filter's graph");
  require((a.array() > 0.0).all(), errc::invalid_argument, "vertex weights must be positive");
  require(params.tol > 0.0 && params.max_iter >= 1, errc::invalid_argument, "bad parameters");

  const int m = static_cast<int>(family.members.size());
  const Eigen::VectorXd alphas = family.resolved_alphas();

  RowMajorXd members(n, m), V(n, m), W = RowMajorXd::Ones(n, m), phi, psi, tmp;
  for (int i = 0; i < m; ++i) members.col(i) = family.members[static_cast<std::size_t>(i)].weights;

  auto apply_weighted = [&](const RowMajorXd& in, RowMajorXd& out) {
    tmp = a.asDiagonal() * in;
    filter_positive(filter, tmp, out);
  };

  Eigen::VectorXd bary = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::VectorXd log_bary(n);

  BarycenterResult res;
  apply_weighted(W, phi);
  for (int it = 1; it <= params.max_iter; ++it) {
    V = members.cwiseQuotient(phi.cwiseMax(kFloor));
    apply_weighted(V, psi);

    // Geometric mean across members, in log space so isolated components
    // (zero filtered mass under some member) stay harmless.
    log_bary.setZero();
    for (int i = 0; i < m; ++i)
      log_bary +=
          alphas(i) * psi.col(i).cwiseMax(kFloor).cwiseMin(kCeil).array().log().matrix();
    bary = (log_bary.array() - log_bary.maxCoeff()).exp();
    const double mass = bary.sum();
    require(mass > 0.0, errc::kernel_not_positive, "barycenter iterate collapsed to zero");
    bary /= mass;

    W = bary.replicate(1, m).cwiseQuotient(psi.cwiseMax(kFloor));
    apply_weighted(W, phi);
    res.marginal_error = (V.cwiseProduct(phi) - members).cwiseAbs().colwise().sum().maxCoeff();
    res.iterations = it;
    if (res.marginal_error <= params.tol) {
      res.converged = true;
      break;
    }
  }

  bary /= bary.sum();
  res.barycenter = Distribution::from_weights(bary);
  res.scalings.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) res.scalings.emplace_back(V.col(i), W.col(i));
  return res;
}

double barycentric_distance(const HeatFilter& filter, const DistributionFamily& family_t,
                            const DistributionFamily& family_c, const Eigen::VectorXd& a,
                            const SinkhornParams& params) {
  const auto bary_t = sinkhorn_barycenter(filter, family_t, a, params);
  const auto bary_c = sinkhorn_barycenter(filter, family_c, a, params);
  return geodesic_sinkhorn(filter, bary_t.barycenter, bary_c.barycenter, a, params).cost;
}

Eigen::VectorXd expected_barycenter_effect(const HeatFilter& filter,
                                           const DistributionFamily& family_t,
                                           const DistributionFamily& family_c,
                                           const Eigen::MatrixXd& features,
                                           const Eigen::VectorXd& a,
                                           const SinkhornParams& params) {
  require(features.rows() == filter.size(), errc::length_mismatch,
          "features must be row-aligned with graph vertices");
  const auto bary_t = sinkhorn_barycenter(filter, family_t, a, params);
  const auto bary_c = sinkhorn_barycenter(filter, family_c, a, params);
  return features.transpose() * (bary_t.barycenter.weights - bary_c.barycenter.weights);
}

Eigen::VectorXd tv_baseline_effect(const DistributionFamily& family_t,
                                   const DistributionFamily& family_c,
                                   const Eigen::MatrixXd& features) {
  const int n = static_cast<int>(features.rows());
  family_t.validate(n);
  family_c.validate(n);
  auto mixture = [n](const DistributionFamily& fam) {
    const Eigen::VectorXd alphas = fam.resolved_alphas();
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < fam.members.size(); ++i)
      mix += alphas(static_cast<Eigen::Index>(i)) * fam.members[i].weights;
    return mix;
  };
  return features.transpose() * (mixture(family_t) - mixture(family_c));
}

}  // namespace geosink
