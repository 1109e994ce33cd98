#include "geosink/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geosink/rng.hpp"

namespace geosink {

namespace {

constexpr double kDivisionFloor = 1e-300;

// Kernel application with the positivity policy: outputs below
// -1e-12 |input|_inf mean the approximation is invalid for this graph/time
// combination. The returned signal is raw; division sites floor it at
// 1e-300, while marginal errors must see the unfloored values (otherwise a
// pair split across graph components reaches a phantom fixed point where
// mu / floor * floor == mu).
template <class Op>
Eigen::VectorXd filter_checked(const Op& op, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = op.apply(x);
  const double threshold = 1e-12 * x.cwiseAbs().maxCoeff();
  require(y.minCoeff() >= -threshold, errc::kernel_not_positive,
          "heat approximation produced negative mass; increase the degree or diffusion time");
  return y;
}

template <class Op>
void filter_checked(const Op& op, const RowMajorXd& x, RowMajorXd& y) {
  op.apply(x, y);
  const Eigen::RowVectorXd threshold = 1e-12 * x.cwiseAbs().colwise().maxCoeff();
  const Eigen::RowVectorXd mins = y.colwise().minCoeff();
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    require(mins(c) >= -threshold(c), errc::kernel_not_positive,
            "heat approximation produced negative mass; increase the degree or diffusion time");
}

// sum_i a_i mu_i ln(s_i) with the 0 ln(.) = 0 convention on mu_i = 0.
double weighted_log_sum(const Eigen::VectorXd& a, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& s) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu(i) > 0.0) acc += a(i) * mu(i) * std::log(s(i));
  return acc;
}

double plain_log_sum(const Eigen::VectorXd& mu, const Eigen::VectorXd& s) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu(i) > 0.0) acc += mu(i) * std::log(s(i));
  return acc;
}

void check_transport_inputs(int n, const Distribution& mu, const Distribution& nu,
                            const Eigen::VectorXd& a, const SinkhornParams& params) {
  mu.validate();
  nu.validate();
  require(mu.size() == n && nu.size() == n, errc::length_mismatch,
          "distributions must live on the filter's graph");
  require(a.size() == n, errc::length_mismatch, "vertex weights must live on the filter's graph");
  require((a.array() > 0.0).all(), errc::invalid_argument, "vertex weights must be positive");
  require(params.tol > 0.0, errc::invalid_argument, "tolerance must be positive");
  require(params.max_iter >= 1, errc::invalid_argument, "max_iter must be >= 1");
}

}  // namespace

Distribution Distribution::uniform(int n) {
  require(n >= 1, errc::invalid_argument, "empty support");
  return Distribution(Eigen::VectorXd::Constant(n, 1.0 / n));
}

Distribution Distribution::indicator(int n, const std::vector<int>& vertices) {
  require(!vertices.empty(), errc::invalid_argument, "empty indicator set");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int v : vertices) {
    require(v >= 0 && v < n, errc::index_out_of_range, "indicator vertex out of range");
    w(v) += 1.0;
  }
  w /= w.sum();
  return Distribution(std::move(w));
}

Distribution Distribution::from_weights(Eigen::VectorXd w) {
  require(w.size() >= 1, errc::invalid_argument, "empty weight vector");
  require((w.array() >= 0.0).all(), errc::invalid_argument, "weights must be non-negative");
  const double total = w.sum();
  require(total > 0.0 && std::isfinite(total), errc::invalid_argument, "weights must have positive mass");
  w /= total;
  w /= w.sum();  // second pass pins the sum to 1 within rounding even for long vectors
  return Distribution(std::move(w));
}

void Distribution::validate() const {
  require(weights.size() >= 1, errc::length_mismatch, "empty distribution");
  require(weights.allFinite(), errc::invalid_argument, "non-finite weights");
  require((weights.array() >= 0.0).all(), errc::invalid_argument, "negative weights");
  require(std::abs(weights.sum() - 1.0) <= 1e-12, errc::invalid_argument,
          "distribution must sum to 1");
}

namespace {

// Alternating scaling updates against an abstract heat operator; shared by
// the Chebyshev and backward-Euler paths.
template <class Op>
TransportResult sinkhorn_single(const Op& op, const Distribution& mu, const Distribution& nu,
                                const Eigen::VectorXd& a, const SinkhornParams& params) {
  const int n = op.size();
  check_transport_inputs(n, mu, nu, a, params);

  TransportResult res;
  res.lambda = 4.0 * op.time();
  res.v = Eigen::VectorXd::Zero(n);
  res.w = Eigen::VectorXd::Ones(n);

  Eigen::VectorXd phi = filter_checked(op, a.cwiseProduct(res.w));
  int stagnant = 0;
  for (int it = 1; it <= params.max_iter; ++it) {
    res.v = mu.weights.cwiseQuotient(phi.cwiseMax(kDivisionFloor));
    res.w = nu.weights.cwiseQuotient(
        filter_checked(op, a.cwiseProduct(res.v)).cwiseMax(kDivisionFloor));
    phi = filter_checked(op, a.cwiseProduct(res.w));
    res.marginal_error = (res.v.cwiseProduct(phi) - mu.weights).lpNorm<1>();
    res.iterations = it;
    if (res.marginal_error <= params.tol) {
      res.converged = true;
      break;
    }
    stagnant = res.marginal_error > 0.5 ? stagnant + 1 : 0;
    require(stagnant < 50, errc::disconnected,
            "marginal error stagnated above 0.5; are mu and nu in the same graph component?");
  }

  res.cost = res.lambda * (weighted_log_sum(a, mu.weights, res.v) +
                           weighted_log_sum(a, nu.weights, res.w));
  res.kl = plain_log_sum(mu.weights, res.v) +
           plain_log_sum(nu.weights, a.cwiseProduct(res.w).cwiseMax(kDivisionFloor)) - 1.0;
  return res;
}

template <class Op>
std::vector<TransportResult> sinkhorn_many(const Op& op, const std::vector<Distribution>& mus,
                                           const std::vector<Distribution>& nus,
                                           const Eigen::VectorXd& a,
                                           const SinkhornParams& params) {
  require(mus.size() == nus.size(), errc::size_mismatch, "pair lists differ in length");
  const int n = op.size();
  const int total = static_cast<int>(mus.size());
  for (int p = 0; p < total; ++p) check_transport_inputs(n, mus[p], nus[p], a, params);
  if (total == 0) return {};

  std::vector<TransportResult> results(static_cast<std::size_t>(total));
  for (auto& r : results) r.lambda = 4.0 * op.time();

  std::vector<int> active(static_cast<std::size_t>(total));
  std::iota(active.begin(), active.end(), 0);
  std::vector<int> stagnant(static_cast<std::size_t>(total), 0);

  RowMajorXd V(n, total), W(n, total), M(n, total), N(n, total), phi, psi, tmp;
  for (int p = 0; p < total; ++p) {
    M.col(p) = mus[static_cast<std::size_t>(p)].weights;
    N.col(p) = nus[static_cast<std::size_t>(p)].weights;
    W.col(p).setOnes();
  }
  V.setZero();

  const Eigen::VectorXd av = a;
  auto apply_weighted = [&](const RowMajorXd& in, RowMajorXd& out) {
    tmp = av.asDiagonal() * in;
    filter_checked(op, tmp, out);
  };

  apply_weighted(W, phi);
  for (int it = 1; it <= params.max_iter && !active.empty(); ++it) {
    V = M.cwiseQuotient(phi.cwiseMax(kDivisionFloor));
    apply_weighted(V, psi);
    W = N.cwiseQuotient(psi.cwiseMax(kDivisionFloor));
    apply_weighted(W, phi);

    // Finalise converged columns and compact the batch.
    const Eigen::RowVectorXd errors = (V.cwiseProduct(phi) - M).cwiseAbs().colwise().sum();
    std::vector<int> still;
    still.reserve(active.size());
    std::vector<Eigen::Index> keep;
    keep.reserve(active.size());
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(active.size()); ++c) {
      const int pair = active[static_cast<std::size_t>(c)];
      auto& res = results[static_cast<std::size_t>(pair)];
      res.iterations = it;
      res.marginal_error = errors(c);
      const bool done = res.marginal_error <= params.tol;
      if (done) res.converged = true;
      const bool last_chance = it == params.max_iter;
      if (done || last_chance) {
        res.v = V.col(c);
        res.w = W.col(c);
      }
      if (!done) {
        stagnant[static_cast<std::size_t>(pair)] =
            res.marginal_error > 0.5 ? stagnant[static_cast<std::size_t>(pair)] + 1 : 0;
        require(stagnant[static_cast<std::size_t>(pair)] < 50, errc::disconnected,
                "marginal error stagnated above 0.5 for pair " + std::to_string(pair));
        still.push_back(pair);
        keep.push_back(c);
      }
    }
    if (still.size() != active.size()) {
      const Eigen::Index kept = static_cast<Eigen::Index>(keep.size());
      RowMajorXd v2(n, kept), w2(n, kept), m2(n, kept), n2(n, kept), phi2(n, kept);
      for (Eigen::Index q = 0; q < kept; ++q) {
        v2.col(q) = V.col(keep[static_cast<std::size_t>(q)]);
        w2.col(q) = W.col(keep[static_cast<std::size_t>(q)]);
        m2.col(q) = M.col(keep[static_cast<std::size_t>(q)]);
        n2.col(q) = N.col(keep[static_cast<std::size_t>(q)]);
        phi2.col(q) = phi.col(keep[static_cast<std::size_t>(q)]);
      }
      V.swap(v2);
      W.swap(w2);
      M.swap(m2);
      N.swap(n2);
      phi.swap(phi2);
      active = std::move(still);
    }
  }

  for (int p = 0; p < total; ++p) {
    auto& res = results[static_cast<std::size_t>(p)];
    res.cost = res.lambda * (weighted_log_sum(a, mus[static_cast<std::size_t>(p)].weights, res.v) +
                             weighted_log_sum(a, nus[static_cast<std::size_t>(p)].weights, res.w));
    res.kl = plain_log_sum(mus[static_cast<std::size_t>(p)].weights, res.v) +
             plain_log_sum(nus[static_cast<std::size_t>(p)].weights,
                           a.cwiseProduct(res.w).cwiseMax(kDivisionFloor)) -
             1.0;
  }
  return results;
}

}  // namespace

TransportResult geodesic_sinkhorn(const HeatFilter& filter, const Distribution& mu,
                                  const Distribution& nu, const Eigen::VectorXd& a,
                                  const SinkhornParams& params) {
  return sinkhorn_single(filter, mu, nu, a, params);
}

std::vector<TransportResult> geodesic_sinkhorn_batch(const HeatFilter& filter,
                                                     const std::vector<Distribution>& mus,
                                                     const std::vector<Distribution>& nus,
                                                     const Eigen::VectorXd& a,
                                                     const SinkhornParams& params) {
  return sinkhorn_many(filter, mus, nus, a, params);
}

TransportResult euler_sinkhorn(const EulerHeat& euler, const Distribution& mu,
                               const Distribution& nu, const Eigen::VectorXd& a,
                               const SinkhornParams& params) {
  return sinkhorn_single(euler, mu, nu, a, params);
}

std::vector<TransportResult> euler_sinkhorn_batch(const EulerHeat& euler,
                                                  const std::vector<Distribution>& mus,
                                                  const std::vector<Distribution>& nus,
                                                  const Eigen::VectorXd& a,
                                                  const SinkhornParams& params) {
  return sinkhorn_many(euler, mus, nus, a, params);
}

TransportResult dense_sinkhorn(const Eigen::MatrixXd& cost_matrix, const Distribution& mu,
                               const Distribution& nu, double lambda,
                               const SinkhornParams& params) {
  mu.validate();
  nu.validate();
  require(cost_matrix.allFinite(), errc::invalid_argument, "cost matrix has non-finite entries");
  require(lambda > 0.0, errc::invalid_argument, "lambda must be positive");
  require(cost_matrix.rows() == mu.size() && cost_matrix.cols() == nu.size(),
          errc::length_mismatch, "cost matrix shape does not match the marginals");
  require(params.tol > 0.0 && params.max_iter >= 1, errc::invalid_argument, "bad Sinkhorn parameters");

  const Eigen::MatrixXd kernel = (-cost_matrix / lambda).array().exp();
  for (Eigen::Index i = 0; i < kernel.rows(); ++i)
    require(kernel.row(i).maxCoeff() > 0.0, errc::numerical_underflow,
            "kernel row underflowed to zero; increase lambda");
  for (Eigen::Index j = 0; j < kernel.cols(); ++j)
    require(kernel.col(j).maxCoeff() > 0.0, errc::numerical_underflow,
            "kernel column underflowed to zero; increase lambda");

  TransportResult res;
  res.lambda = lambda;
  res.w = Eigen::VectorXd::Ones(nu.size());
  res.v = Eigen::VectorXd::Zero(mu.size());

  Eigen::VectorXd phi = kernel * res.w;
  for (int it = 1; it <= params.max_iter; ++it) {
    res.v = mu.weights.cwiseQuotient(phi.cwiseMax(kDivisionFloor));
    res.w = nu.weights.cwiseQuotient((kernel.transpose() * res.v).cwiseMax(kDivisionFloor));
    phi = kernel * res.w;
    res.marginal_error = (res.v.cwiseProduct(phi) - mu.weights).lpNorm<1>();
    res.iterations = it;
    if (res.marginal_error <= params.tol) {
      res.converged = true;
      break;
    }
  }

  res.cost = res.v.dot(kernel.cwiseProduct(cost_matrix) * res.w);
  res.kl = plain_log_sum(mu.weights, res.v.cwiseMax(kDivisionFloor)) +
           plain_log_sum(nu.weights, res.w.cwiseMax(kDivisionFloor)) - 1.0;
  return res;
}

Eigen::VectorXd plan_row(const TransportResult& result, const HeatFilter& filter,
                         const Eigen::VectorXd& a, int i) {
  const int n = filter.size();
  require(i >= 0 && i < n, errc::index_out_of_range, "plan row index");
  require(result.v.size() == n && result.w.size() == n, errc::length_mismatch,
          "result does not match the filter's graph");
  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(n);
  impulse(i) = 1.0;
  const Eigen::VectorXd column = filter.apply(impulse);
  return (result.v(i) * column.cwiseProduct(a.cwiseProduct(result.w))).cwiseMax(0.0);
}

PointCloud mccann_interpolate(const PointCloud& source, const PointCloud& target,
                              const std::function<Eigen::VectorXd(int)>& plan_row_fn, double s,
                              int num_samples, std::uint64_t rng_seed) {
  source.validate();
  target.validate();
  require(source.dim() == target.dim(), errc::size_mismatch,
          "source and target dimensions differ");
  require(s >= 0.0 && s <= 1.0, errc::invalid_argument, "interpolation time must be in [0, 1]");
  require(num_samples >= 1, errc::invalid_argument, "need at least one sample");

  const int m_src = static_cast<int>(source.size());
  const int m_tgt = static_cast<int>(target.size());

  Eigen::VectorXd row_mass(m_src);
  for (int i = 0; i < m_src; ++i) {
    Eigen::VectorXd row = plan_row_fn(i);
    require(row.size() == m_tgt, errc::length_mismatch, "plan row has wrong length");
    row_mass(i) = row.cwiseMax(0.0).sum();
  }
  const double total = row_mass.sum();
  require(total >= 1.0 - 1e-6, errc::degenerate_plan,
          "plan mass below 1; transport result unusable for interpolation");

  // Cumulative source masses, then per-source counts in draw order.
  Eigen::VectorXd cum(m_src);
  std::partial_sum(row_mass.data(), row_mass.data() + m_src, cum.data());
  Rng rng(rng_seed);
  std::vector<int> counts(static_cast<std::size_t>(m_src), 0);
  for (int q = 0; q < num_samples; ++q) {
    const double u = rng.uniform() * total;
    const int i = static_cast<int>(std::lower_bound(cum.data(), cum.data() + m_src, u) - cum.data());
    ++counts[static_cast<std::size_t>(std::min(i, m_src - 1))];
  }

  Eigen::MatrixXd out(num_samples, source.dim());
  int written = 0;
  Eigen::VectorXd row_cum(m_tgt);
  for (int i = 0; i < m_src; ++i) {
    const int c = counts[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    const Eigen::VectorXd row = plan_row_fn(i).cwiseMax(0.0);
    std::partial_sum(row.data(), row.data() + m_tgt, row_cum.data());
    const double row_total = row_cum(m_tgt - 1);
    require(row_total > 0.0, errc::degenerate_plan, "sampled an empty plan row");
    for (int q = 0; q < c; ++q) {
      const double u = rng.uniform() * row_total;
      const int j =
          static_cast<int>(std::lower_bound(row_cum.data(), row_cum.data() + m_tgt, u) - row_cum.data());
      out.row(written++) =
          (1.0 - s) * source.points.row(i) + s * target.points.row(std::min(j, m_tgt - 1));
    }
  }
  return PointCloud(std::move(out));
}

double solve_assignment(const Eigen::MatrixXd& cost) {
  require(cost.rows() == cost.cols(), errc::size_mismatch, "assignment needs a square matrix");
  const int n = static_cast<int>(cost.rows());

  // Shortest augmenting paths with dual potentials (Jonker-Volgenant style),
  // 1-indexed with column 0 as the virtual root.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), vpot(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> matched(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    matched[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = matched[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - vpot[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(matched[static_cast<std::size_t>(j)])] += delta;
          vpot[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (matched[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      matched[static_cast<std::size_t>(j0)] = matched[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    if (matched[static_cast<std::size_t>(j)]) total += cost(matched[static_cast<std::size_t>(j)] - 1, j - 1);
  return total;
}

double exact_w2(const PointCloud& x, const PointCloud& y) {
  x.validate();
  y.validate();
  require(x.size() == y.size(), errc::size_mismatch, "point sets must have equal cardinality");
  require(x.dim() == y.dim(), errc::size_mismatch, "point sets must have equal dimension");
  const int m = static_cast<int>(x.size());
  require(m <= 2000, errc::too_large, "exact assignment limited to 2000 points");

  Eigen::MatrixXd cost(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) cost(i, j) = (x.points.row(i) - y.points.row(j)).squaredNorm();
  return std::sqrt(std::max(0.0, solve_assignment(cost)) / m);
}

}  // namespace geosink
