#include "geosink/heat.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

namespace geosink {

namespace {

// Scaled modified Bessel values e^{-z} I_k(z) for k = 0..kmax via Miller's
// backward recurrence, normalised with I_0(z) + 2 sum_{j>=1} I_j(z) = e^z.
std::vector<double> scaled_bessel_i(double z, int kmax, int start) {
  std::vector<double> f(static_cast<std::size_t>(start) + 2, 0.0);
  f[static_cast<std::size_t>(start) + 1] = 0.0;
  f[static_cast<std::size_t>(start)] = 1e-30;
  for (int j = start; j >= 1; --j) {
    f[static_cast<std::size_t>(j) - 1] = f[static_cast<std::size_t>(j) + 1] + (2.0 * j / z) * f[static_cast<std::size_t>(j)];
    if (std::abs(f[static_cast<std::size_t>(j) - 1]) > 1e250) {
      const double inv = 1e-250;
      for (std::size_t q = static_cast<std::size_t>(j) - 1; q < f.size(); ++q) f[q] *= inv;
    }
  }
  double norm = f[0];
  for (int j = 1; j <= start; ++j) norm += 2.0 * f[static_cast<std::size_t>(j)];
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int k = 0; k <= kmax && k <= start; ++k) out[static_cast<std::size_t>(k)] = f[static_cast<std::size_t>(k)] / norm;
  return out;
}

}  // namespace

Eigen::VectorXd heat_chebyshev_coefficients(double t, int degree) {
  require(degree >= 1, errc::invalid_argument, "Chebyshev degree must be >= 1");
  require(t >= 0.0 && std::isfinite(t), errc::non_positive_time, "diffusion time must be finite and >= 0");

  Eigen::VectorXd b(degree + 1);
  if (t < 1e-300) {
    b.setZero();
    b(0) = 2.0;
    return b;
  }

  // Start well above both the requested order and the turnover index ~t of
  // the Bessel sequence, then grow until two runs agree to 1e-13.
  int start = degree + static_cast<int>(std::ceil(t)) + 40 +
              static_cast<int>(2.0 * std::sqrt(static_cast<double>(degree) + t));
  std::vector<double> cur = scaled_bessel_i(t, degree, start);
  for (int round = 0; round < 8; ++round) {
    const int next_start = start + start / 2 + 20;
    std::vector<double> refined = scaled_bessel_i(t, degree, next_start);
    double worst = 0.0;
    for (int k = 0; k <= degree; ++k) {
      const double scale = std::max(std::abs(refined[static_cast<std::size_t>(k)]), 1e-280);
      worst = std::max(worst, std::abs(refined[static_cast<std::size_t>(k)] - cur[static_cast<std::size_t>(k)]) / scale);
    }
    cur = std::move(refined);
    start = next_start;
    if (worst <= 1e-13) break;
  }

  b(0) = 2.0 * cur[0];
  double sign = -1.0;
  for (int k = 1; k <= degree; ++k) {
    b(k) = 2.0 * sign * cur[static_cast<std::size_t>(k)];
    sign = -sign;
  }
  return b;
}

HeatFilter::HeatFilter(const GraphLaplacian& laplacian, double t, int degree)
    : kind_(laplacian.kind), t_(t), degree_(degree) {
  require(t > 0.0 && std::isfinite(t), errc::non_positive_time, "diffusion time must be > 0");
  require(degree >= 1, errc::invalid_argument, "Chebyshev degree must be >= 1");

  if (laplacian.kind == LaplacianKind::normalized) {
    scale_ = 1.0;
  } else {
    const double bound = laplacian.lambda_max_bound;
    require(bound >= 0.0 && std::isfinite(bound), errc::invalid_argument, "bad lambda_max_bound");
    scale_ = bound > 1e-300 ? 2.0 / bound : 1.0;
  }
  t_eff_ = t / scale_;  // t * lambda_max_bound / 2 for the combinatorial kind

  // Rescale stored values; the spectrum of scale * L lies in [0, 2].
  std::vector<Triplet> trips;
  const auto& m = laplacian.matrix;
  trips.reserve(m.values().size());
  for (int i = 0; i < m.size(); ++i)
    for (int p = m.row_offsets()[static_cast<std::size_t>(i)]; p < m.row_offsets()[static_cast<std::size_t>(i) + 1]; ++p)
      if (m.col_indices()[p] >= i) trips.push_back({i, m.col_indices()[p], m.values()[p] * scale_});
  scaled_ = SparseSymMatrix::from_triplets(m.size(), trips);

  coeff_ = heat_chebyshev_coefficients(t_eff_, degree_);
}

Eigen::VectorXd HeatFilter::apply(const Eigen::VectorXd& f) const {
  require(f.size() == scaled_.size(), errc::length_mismatch, "signal length");
  Eigen::VectorXd prev = f;                         // T_0 f
  Eigen::VectorXd acc = (coeff_(0) / 2.0) * f;
  Eigen::VectorXd cur(f.size()), tmp(f.size());
  scaled_.multiply(prev, cur);
  cur -= prev;                                      // T_1 f = (L_s - I) f
  acc += coeff_(1) * cur;
  for (int k = 2; k <= degree_; ++k) {
    scaled_.multiply(cur, tmp);
    tmp = 2.0 * (tmp - cur) - prev;                 // T_k = 2 (L_s - I) T_{k-1} - T_{k-2}
    prev.swap(cur);
    cur.swap(tmp);
    acc += coeff_(k) * cur;
  }
  return acc;
}

void HeatFilter::apply(const RowMajorXd& signals, RowMajorXd& out) const {
  require(signals.rows() == scaled_.size(), errc::length_mismatch, "signal length");
  RowMajorXd prev = signals;
  out = (coeff_(0) / 2.0) * signals;
  RowMajorXd cur, tmp;
  scaled_.multiply(prev, cur);
  cur -= prev;
  out += coeff_(1) * cur;
  for (int k = 2; k <= degree_; ++k) {
    scaled_.multiply(cur, tmp);
    tmp = 2.0 * (tmp - cur) - prev;
    prev.swap(cur);
    cur.swap(tmp);
    out += coeff_(k) * cur;
  }
}

EulerHeat::EulerHeat(const GraphLaplacian& laplacian, double t, int steps, Solver solver)
    : n_(laplacian.size()), steps_(steps), t_(t) {
  require(t > 0.0 && std::isfinite(t), errc::non_positive_time, "diffusion time must be > 0");
  require(steps >= 1, errc::invalid_argument, "substep count must be >= 1");

  const double h = t / steps;
  std::vector<Triplet> trips;
  const auto& m = laplacian.matrix;
  for (int i = 0; i < n_; ++i) {
    bool has_diag = false;
    for (int p = m.row_offsets()[static_cast<std::size_t>(i)]; p < m.row_offsets()[static_cast<std::size_t>(i) + 1]; ++p) {
      const int j = m.col_indices()[p];
      if (j < i) continue;
      double v = h * m.values()[p];
      if (j == i) {
        v += 1.0;
        has_diag = true;
      }
      trips.push_back({i, j, v});
    }
    if (!has_diag) trips.push_back({i, i, 1.0});
  }
  system_ = SparseSymMatrix::from_triplets(n_, trips);

  direct_ = solver == Solver::direct || (solver == Solver::automatic && n_ <= 4000);
  if (direct_) {
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    const Eigen::SparseMatrix<double> sys = system_.to_eigen();
    ldlt_->compute(sys);
    require(ldlt_->info() == Eigen::Success, errc::solve_failure, "sparse LDLT factorisation failed");
  }
}

void EulerHeat::solve_batch(RowMajorXd& x) const {
  if (direct_) {
    Eigen::MatrixXd rhs = x;  // column-major copy for the triangular solves
    Eigen::MatrixXd sol = ldlt_->solve(rhs);
    require(ldlt_->info() == Eigen::Success, errc::solve_failure, "sparse LDLT solve failed");
    x = sol;
    return;
  }

  // Every signal runs its own CG, all in lockstep so each sweep over the
  // sparse matrix serves the whole batch. Column reductions stay row-major
  // friendly via colwise sums.
  const Eigen::Index cols = x.cols();
  const RowMajorXd b = x;
  RowMajorXd r, ap;
  system_.multiply(x, ap);
  r = b - ap;
  RowMajorXd p = r;
  Eigen::RowVectorXd rs = r.cwiseProduct(r).colwise().sum();
  Eigen::RowVectorXd b_norm2 = b.cwiseProduct(b).colwise().sum().cwiseMax(1e-300);

  const double tol2 = 1e-10 * 1e-10;
  const long max_iter = 10L * n_;
  Eigen::RowVectorXd alpha(cols), beta(cols), rs_new(cols), pap(cols);
  long it = 0;
  while ((rs.array() > tol2 * b_norm2.array()).any()) {
    require(it < max_iter, errc::solve_failure, "conjugate gradient exceeded 10 n iterations");
    ++it;

    system_.multiply(p, ap);
    pap = p.cwiseProduct(ap).colwise().sum();
    for (Eigen::Index c = 0; c < cols; ++c) alpha(c) = pap(c) > 0.0 ? rs(c) / pap(c) : 0.0;
    x += p * alpha.asDiagonal();
    r -= ap * alpha.asDiagonal();
    rs_new = r.cwiseProduct(r).colwise().sum();
    for (Eigen::Index c = 0; c < cols; ++c) beta(c) = rs(c) > 0.0 ? rs_new(c) / rs(c) : 0.0;
    p = r + p * beta.asDiagonal();
    rs = rs_new;
  }
}

Eigen::VectorXd EulerHeat::apply(const Eigen::VectorXd& f) const {
  require(f.size() == n_, errc::length_mismatch, "signal length");
  RowMajorXd x(n_, 1);
  x.col(0) = f;
  for (int s = 0; s < steps_; ++s) solve_batch(x);
  return x.col(0);
}

void EulerHeat::apply(const RowMajorXd& signals, RowMajorXd& out) const {
  require(signals.rows() == n_, errc::length_mismatch, "signal length");
  out = signals;
  for (int s = 0; s < steps_; ++s) solve_batch(out);
}

Eigen::VectorXd apply_euler(const GraphLaplacian& laplacian, double t, int steps,
                            const Eigen::VectorXd& f) {
  return EulerHeat(laplacian, t, steps).apply(f);
}

Eigen::MatrixXd exact_heat_oracle(const GraphLaplacian& laplacian, double t) {
  const int n = laplacian.size();
  require(n <= 2000, errc::too_large, "dense heat oracle limited to n <= 2000");
  require(t >= 0.0 && std::isfinite(t), errc::non_positive_time, "diffusion time must be >= 0");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian.matrix.to_dense());
  require(eig.info() == Eigen::Success, errc::solve_failure, "eigendecomposition failed");
  const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp();
  return eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<ConvergenceRow> convergence_study(const GraphLaplacian& laplacian, double t,
                                              const std::vector<int>& orders) {
  const int n = laplacian.size();
  const Eigen::MatrixXd exact = exact_heat_oracle(laplacian, t);
  const RowMajorXd identity = RowMajorXd::Identity(n, n);

  std::vector<ConvergenceRow> rows;
  rows.reserve(orders.size());
  RowMajorXd approx;
  for (int order : orders) {
    ConvergenceRow row;
    row.order = order;
    HeatFilter cheb(laplacian, t, order);
    cheb.apply(identity, approx);
    row.cheb_fro_error = (approx - exact).norm();
    EulerHeat euler(laplacian, t, order);
    euler.apply(identity, approx);
    row.euler_fro_error = (approx - exact).norm();
    rows.push_back(row);
  }
  return rows;
}

void save_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << "order,cheb_fro_error,euler_fro_error\n";
  out.precision(17);
  for (const auto& r : rows) out << r.order << ',' << r.cheb_fro_error << ',' << r.euler_fro_error << '\n';
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

}  // namespace geosink
