#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "geosink/graph.hpp"
#include "geosink/sparse.hpp"

namespace geosink {

// Coefficients b_0..b_K of the Chebyshev expansion
//   e^{-t x} = b_0/2 + sum_{k>=1} b_k T_k(x - 1)   for x in [0, 2],
// where b_0 = 2 e^{-t} I_0(t) and b_k = 2 e^{-t} (-1)^k I_k(t). The scaled
// Bessel values e^{-t} I_k(t) are produced directly by Miller's backward
// recurrence, normalised with I_0 + 2 sum I_k = e^t, so no intermediate
// overflows even for large t. Relative accuracy 1e-12.
Eigen::VectorXd heat_chebyshev_coefficients(double t, int degree);

// Prepared approximation of the heat operator e^{-tL} acting on vertex
// signals. The Laplacian is rescaled so its spectrum lies in [0, 2]; for the
// combinatorial kind the factor 2/lambda_max is absorbed into an effective
// time, which keeps the rescaling exact.
class HeatFilter {
 public:
  HeatFilter(const GraphLaplacian& laplacian, double t, int degree);

  // p_K(L,t) f through the three-term recurrence; exactly `degree` sparse
  // matvecs and no dense n x n intermediate.
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;

  // Same recurrence with many signals as columns, sharing each sweep over
  // the sparse matrix.
  void apply(const RowMajorXd& signals, RowMajorXd& out) const;

  int size() const { return scaled_.size(); }
  double time() const { return t_; }
  double effective_time() const { return t_eff_; }
  double scale() const { return scale_; }
  int degree() const { return degree_; }
  const Eigen::VectorXd& coefficients() const { return coeff_; }
  const SparseSymMatrix& scaled_laplacian() const { return scaled_; }
  LaplacianKind kind() const { return kind_; }

 private:
  SparseSymMatrix scaled_;
  LaplacianKind kind_;
  double t_;
  double t_eff_;
  double scale_;
  int degree_;
  Eigen::VectorXd coeff_;
};

// Backward-Euler approximation (I + (t/K)L)^{-K} of the heat operator. The
// system matrix is factorised (or prepared for CG) once and reused across
// applications. `direct` keeps a sparse LDLT; `lockstep_cg` runs one CG per
// signal, all signals advancing together, to residual 1e-10.
class EulerHeat {
 public:
  enum class Solver { automatic, direct, lockstep_cg };

  EulerHeat(const GraphLaplacian& laplacian, double t, int steps, Solver solver = Solver::automatic);

  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
  void apply(const RowMajorXd& signals, RowMajorXd& out) const;

  int size() const { return n_; }
  int steps() const { return steps_; }
  double time() const { return t_; }

 private:
  void solve_batch(RowMajorXd& x) const;

  int n_;
  int steps_;
  double t_;
  bool direct_;
  SparseSymMatrix system_;  // I + (t/K) L
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

// One-shot convenience wrapper.
Eigen::VectorXd apply_euler(const GraphLaplacian& laplacian, double t, int steps,
                            const Eigen::VectorXd& f);

// Full H_t = Psi e^{-t Lambda} Psi^T by dense symmetric eigendecomposition.
// Test oracle and convergence-study reference only; guarded to n <= 2000.
Eigen::MatrixXd exact_heat_oracle(const GraphLaplacian& laplacian, double t);

struct ConvergenceRow {
  int order;
  double cheb_fro_error;
  double euler_fro_error;
};

// Frobenius error of the Chebyshev and backward-Euler reconstructions of
// H_t against the dense oracle, one row per requested order.
std::vector<ConvergenceRow> convergence_study(const GraphLaplacian& laplacian, double t,
                                              const std::vector<int>& orders);

void save_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);

}  // namespace geosink
