#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>

#include "mfioc/linalg.hpp"
#include "mfioc/trajectory.hpp"

namespace mfioc {

/// Continuous-time LTI plant xdot = A x + B u.
struct LtiSystem {
  Matrix A;  // n x n
  Matrix B;  // n x m

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }

  void validate() const {
    if (A.rows() < 1 || A.rows() != A.cols()) {
      throw ArgumentError("LtiSystem: A must be square and non-empty");
    }
    if (B.rows() != A.rows() || B.cols() < 1) {
      throw ArgumentError("LtiSystem: B must be n x m with m >= 1");
    }
    if (!A.allFinite() || !B.allFinite()) {
      throw ArgumentError("LtiSystem: non-finite entries");
    }
  }
};

/// Quadratic cost weights; Q is PSD and R is PD.
struct CostWeights {
  Matrix Q;  // n x n
  Matrix R;  // m x m
};

struct LqrSolution {
  Matrix P;  // stabilizing ARE solution
  Matrix K;  // R^-1 B^T P
};

inline double care_residual(const LtiSystem& sys, const CostWeights& cost,
                            const Eigen::Ref<const Matrix>& P) {
  const Matrix rinv_bt = cost.R.ldlt().solve(sys.B.transpose());
  const Matrix res = sys.A.transpose() * P + P * sys.A -
                     P * sys.B * rinv_bt * P + cost.Q;
  return res.norm();
}

inline double max_real_eig(const Eigen::Ref<const Matrix>& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw NumericalBreakdown("eigenvalue computation failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

inline bool is_hurwitz(const Eigen::Ref<const Matrix>& a) {
  return max_real_eig(a) < 0.0;
}

/// Hautus test: rank [A - mu I, B] = n for every eigenvalue mu of A in the
/// closed right half plane.
inline bool is_stabilizable(const LtiSystem& sys) {
  sys.validate();
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  const Index n = sys.n();
  Eigen::EigenSolver<Matrix> es(sys.A, false);
  if (es.info() != Eigen::Success) return false;
  const double margin = 1e-10 * std::max(1.0, sys.A.norm());
  for (Index k = 0; k < n; ++k) {
    const Complex mu = es.eigenvalues()(k);
    if (mu.real() < -margin) continue;
    CMatrix pencil(n, n + sys.m());
    pencil.leftCols(n) = sys.A.cast<Complex>() -
                         mu * CMatrix::Identity(n, n);
    pencil.rightCols(sys.m()) = sys.B.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const auto& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * sv(0)) ++rank;
    }
    if (rank < n) return false;
  }
  return true;
}

namespace detail {

/// Solves Ac^T X + X Ac + C = 0 for symmetric C through the Kronecker form.
inline Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& ac,
                             const Eigen::Ref<const Matrix>& c) {
  const Index n = ac.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix op = kron(eye, ac.transpose()) + kron(ac.transpose(), eye);
  const Vector x = op.fullPivLu().solve(-vectorize(c));
  return symmetrize(unvectorize(x, n, n));
}

}  // namespace detail

/// Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0.
///
/// The stable invariant subspace [X1; X2] of the Hamiltonian
/// [[A, -B R^-1 B^T], [-Q, -A^T]] gives P = X2 X1^-1, which is then polished
/// with up to three Newton (Kleinman) sweeps.
inline LqrSolution solve_care(const LtiSystem& sys, const CostWeights& cost) {
  sys.validate();
  const Index n = sys.n();
  const Index m = sys.m();
  if (cost.Q.rows() != n || cost.Q.cols() != n || cost.R.rows() != m ||
      cost.R.cols() != m) {
    throw ArgumentError("solve_care: cost weights do not match the system");
  }
  if (!cost.Q.allFinite() || !cost.R.allFinite()) {
    throw ArgumentError("solve_care: non-finite cost weights");
  }
  const double qscale = std::max(1.0, cost.Q.norm());
  if ((cost.Q - cost.Q.transpose()).norm() > 1e-10 * qscale ||
      min_eig_sym(cost.Q) < -1e-10 * qscale) {
    throw InfeasibleModelError("solve_care: Q must be symmetric PSD");
  }
  const double rscale = std::max(1.0, cost.R.norm());
  if ((cost.R - cost.R.transpose()).norm() > 1e-10 * rscale ||
      !(min_eig_sym(cost.R) > 0.0)) {
    throw InfeasibleModelError("solve_care: R must be symmetric PD");
  }
  if (!is_stabilizable(sys)) {
    throw InfeasibleModelError("solve_care: (A, B) is not stabilizable");
  }

  const Matrix q = symmetrize(cost.Q);
  const Matrix r = symmetrize(cost.R);
  const Eigen::LLT<Matrix> r_llt(r);
  const Matrix g = sys.B * r_llt.solve(sys.B.transpose());

  Matrix ham(2 * n, 2 * n);
  ham << sys.A, -g, -q, -sys.A.transpose();

  Eigen::ComplexEigenSolver<Matrix> es(ham, true);
  if (es.info() != Eigen::Success) {
    throw NumericalBreakdown("solve_care: Hamiltonian eigensolver failed");
  }
  Eigen::MatrixXcd stable(2 * n, n);
  Index found = 0;
  for (Index k = 0; k < 2 * n; ++k) {
    if (es.eigenvalues()(k).real() < 0.0) {
      if (found == n) break;
      stable.col(found++) = es.eigenvectors().col(k);
    }
  }
  if (found != n) {
    throw NumericalBreakdown(
        "solve_care: Hamiltonian has eigenvalues on the imaginary axis");
  }
  const Eigen::MatrixXcd x1 = stable.topRows(n);
  const Eigen::MatrixXcd x2 = stable.bottomRows(n);
  if (!(x1.fullPivLu().rcond() > 1e-14)) {
    throw NumericalBreakdown("solve_care: stable subspace is not a graph");
  }
  Matrix p = symmetrize(
      x1.transpose().partialPivLu().solve(x2.transpose()).transpose().real());
  if (!p.allFinite()) {
    throw NumericalBreakdown("solve_care: non-finite subspace solution");
  }

  double res = care_residual(sys, cost, p);
  for (int sweep = 0; sweep < 3; ++sweep) {
    const Matrix k = r_llt.solve(sys.B.transpose() * p);
    const Matrix ac = sys.A - sys.B * k;
    if (!is_hurwitz(ac)) break;
    const Matrix candidate =
        detail::solve_lyapunov(ac, q + k.transpose() * r * k);
    if (!candidate.allFinite()) break;
    const double cand_res = care_residual(sys, cost, candidate);
    if (!(cand_res < res)) break;
    p = candidate;
    res = cand_res;
  }

  LqrSolution sol;
  sol.P = p;
  sol.K = r_llt.solve(sys.B.transpose() * p);
  if (!(min_eig_sym(sol.P) > 0.0)) {
    throw NumericalBreakdown("solve_care: solution is not positive definite");
  }
  if (!is_hurwitz(sys.A - sys.B * sol.K)) {
    throw NumericalBreakdown("solve_care: closed loop is not stable");
  }
  if (res > 1e-8 * (1.0 + sol.P.norm())) {
    throw NumericalBreakdown("solve_care: ARE residual " +
                             std::to_string(res) + " above tolerance");
  }
  return sol;
}

/// Samples x(t_j) = expm((A - B K) t_j) x0 and u(t_j) = -K x(t_j) on
/// t_j = j dt, j = 0..floor(T/dt).
inline Trajectory simulate_closed_loop(const LtiSystem& sys,
                                       const Eigen::Ref<const Matrix>& K,
                                       const Eigen::Ref<const Vector>& x0,
                                       double horizon, double dt) {
  sys.validate();
  if (K.rows() != sys.m() || K.cols() != sys.n()) {
    throw ArgumentError("simulate_closed_loop: K must be m x n");
  }
  if (x0.size() != sys.n()) {
    throw ArgumentError("simulate_closed_loop: x0 must have length n");
  }
  if (!(dt > 0.0) || !(horizon >= dt)) {
    throw ArgumentError("simulate_closed_loop: need dt > 0 and T >= dt");
  }
  const Index steps = static_cast<Index>(std::floor(horizon / dt + 1e-9));
  const Index count = steps + 1;
  const Matrix ak = sys.A - sys.B * K;

  Trajectory traj;
  traj.times.resize(count);
  traj.states.resize(sys.n(), count);
  for (Index j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) * dt;
    traj.times(j) = t;
    traj.states.col(j) = j == 0 ? Vector(x0) : Vector(expm(ak * t) * x0);
  }
  traj.inputs = -K * traj.states;
  return traj;
}

struct RandomInstance {
  LtiSystem system;
  CostWeights cost;
  Vector x0;
};

inline constexpr int kRandomSystemBudget = 100;

/// Seeded benchmark instance shaped like the nominal three-state example:
/// symmetric, comfortably stable A; dense B; Q = M^T M + 0.1 I; R = N^T N + I.
inline RandomInstance random_system(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) {
    throw ArgumentError("random_system: n and m must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.5, 1.0);
  auto gaussian = [&](Index rows, Index cols, double sd) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) out(i, j) = sd * normal(rng);
    }
    return out;
  };

  for (int attempt = 0; attempt < kRandomSystemBudget; ++attempt) {
    RandomInstance inst;
    Matrix a = symmetrize(gaussian(n, n, 0.15));
    for (Index i = 0; i < n; ++i) a(i, i) = -uniform(rng);
    const double top = max_eig_sym(a);
    if (top > -0.3) a -= (top + 0.3) * Matrix::Identity(n, n);
    inst.system.A = a;
    inst.system.B = gaussian(n, m, 0.5);
    const Matrix mq = gaussian(n, n, 1.0);
    inst.cost.Q = symmetrize(mq.transpose() * mq) +
                  0.1 * Matrix::Identity(n, n);
    const Matrix nr = gaussian(m, m, 1.0);
    inst.cost.R = symmetrize(nr.transpose() * nr) + Matrix::Identity(m, m);
    inst.x0 = gaussian(n, 1, 1.0);

    if (!is_stabilizable(inst.system)) continue;
    try {
      (void)solve_care(inst.system, inst.cost);
    } catch (const Error&) {
      continue;
    }
    return inst;
  }
  throw GenerationFailure("random_system: no valid instance after " +
                          std::to_string(kRandomSystemBudget) + " draws");
}

}  // namespace mfioc
