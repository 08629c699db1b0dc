#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfioc/assembly.hpp"
#include "mfioc/bsum.hpp"
#include "mfioc/lqr.hpp"
#include "mfioc/trajectory.hpp"

namespace mfioc {

/// One representative (A, B, Q, R, P) of the equivalence class explaining
/// the expert data.
struct RecoveredModel {
  Matrix A_hat;
  Matrix B_hat;
  Matrix Q_hat;
  Matrix R_hat;
  Matrix P_hat;
  Matrix K_hat;

  Index n() const { return A_hat.rows(); }
  Index m() const { return B_hat.cols(); }
  Matrix closed_loop() const { return A_hat - B_hat * K_hat; }
};

/// Decision vector of a known LQR tuple: Z = A^T P, G = P A_K (G omitted when
/// the layout has no G segment).
inline Vector ground_truth_xi(const LtiSystem& sys, const CostWeights& cost,
                              const LqrSolution& lqr,
                              const DecisionLayout& layout) {
  if (sys.n() != layout.n || sys.m() != layout.m) {
    throw ArgumentError("ground_truth_xi: system does not match the layout");
  }
  Vector xi = Vector::Zero(layout.dim());
  auto put = [&](Segment s, const Matrix& m) {
    xi.segment(s.offset, s.length) = vectorize(m);
  };
  put(layout.z(), sys.A.transpose() * lqr.P);
  put(layout.r(), cost.R);
  put(layout.q(), cost.Q);
  put(layout.p(), lqr.P);
  if (layout.with_g) put(layout.g(), lqr.P * (sys.A - sys.B * lqr.K));
  return xi;
}

/// A = P^-1 Z^T, B = P^-1 K*^T R, K = R^-1 B^T P, with the Q/P/R segments
/// symmetrized first.
inline RecoveredModel reconstruct(const Eigen::Ref<const Vector>& xi,
                                  const Eigen::Ref<const Matrix>& k_star,
                                  const DecisionLayout& layout,
                                  double epsilon) {
  if (xi.size() != layout.dim()) {
    throw ArgumentError("reconstruct: xi has the wrong length");
  }
  if (k_star.rows() != layout.m || k_star.cols() != layout.n) {
    throw ArgumentError("reconstruct: K* must be m x n");
  }
  RecoveredModel model;
  const Matrix z = layout.block(xi, layout.z(), layout.n);
  model.Q_hat = symmetrize(layout.block(xi, layout.q(), layout.n));
  model.P_hat = symmetrize(layout.block(xi, layout.p(), layout.n));
  model.R_hat = symmetrize(layout.block(xi, layout.r(), layout.m));

  const double p_min = min_eig_sym(model.P_hat);
  if (!(p_min >= 0.5 * epsilon)) {
    throw RecoveryFailure("reconstruct: P_hat is near-singular (min eig " +
                          std::to_string(p_min) + ")");
  }
  const double r_min = min_eig_sym(model.R_hat);
  if (!(r_min > 0.0)) {
    throw RecoveryFailure("reconstruct: R_hat is not positive definite (min "
                          "eig " + std::to_string(r_min) + ")");
  }
  const Eigen::LLT<Matrix> p_llt(model.P_hat);
  const Eigen::LLT<Matrix> r_llt(model.R_hat);
  model.A_hat = p_llt.solve(z.transpose());
  model.B_hat = p_llt.solve(k_star.transpose() * model.R_hat);
  model.K_hat = r_llt.solve(model.B_hat.transpose() * model.P_hat);
  return model;
}

struct AreResidual {
  double absolute = 0.0;
  /// absolute / (sum of the Frobenius norms of the four terms)
  double relative = 0.0;
};

inline AreResidual are_residual(const RecoveredModel& model) {
  const Matrix ap = model.A_hat.transpose() * model.P_hat;
  const Matrix pa = model.P_hat * model.A_hat;
  const Matrix quad =
      model.P_hat * model.B_hat *
      model.R_hat.ldlt().solve(model.B_hat.transpose() * model.P_hat);
  AreResidual r;
  r.absolute = (ap + pa - quad + model.Q_hat).norm();
  const double scale =
      ap.norm() + pa.norm() + quad.norm() + model.Q_hat.norm();
  r.relative = scale > 0.0 ? r.absolute / scale : r.absolute;
  return r;
}

/// (A_K)^i x0 for i = 0..order.
inline std::vector<Vector> closed_loop_powers(
    const Eigen::Ref<const Matrix>& a_k, const Eigen::Ref<const Vector>& x0,
    int order) {
  std::vector<Vector> out{x0};
  for (int i = 1; i <= order; ++i) out.push_back(a_k * out.back());
  return out;
}

/// Reference powers read from the data: column 0 of Lambda_i is x^(i)(0).
inline std::vector<Vector> data_powers(const DataMatrices& dm) {
  std::vector<Vector> out;
  for (const Matrix& block : dm.lambda_blocks) out.push_back(block.col(0));
  return out;
}

struct DerivativeMatchReport {
  std::vector<double> relative;  // index i -> ||A_hat^i x0 - ref_i|| / ||ref_i||
  double max_relative = 0.0;

  bool passed(double tol) const { return max_relative <= tol; }
};

inline DerivativeMatchReport derivative_match_check(
    const Eigen::Ref<const Matrix>& a_k_hat, const Eigen::Ref<const Vector>& x0,
    const std::vector<Vector>& reference) {
  DerivativeMatchReport rep;
  const auto powers =
      closed_loop_powers(a_k_hat, x0, static_cast<int>(reference.size()) - 1);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double scale = std::max(reference[i].norm(), 1e-300);
    const double rel = (powers[i] - reference[i]).norm() / scale;
    rep.relative.push_back(rel);
    rep.max_relative = std::max(rep.max_relative, rel);
  }
  return rep;
}

struct TrajectoryFit {
  double mse = std::numeric_limits<double>::infinity();
  bool stable = false;
  Trajectory reconstructed;
};

/// Replays the recovered closed loop from the expert's x(0) on the expert's
/// grid. An unstable loop yields mse = +inf and stable = false.
inline TrajectoryFit trajectory_mse(const RecoveredModel& model,
                                    const Trajectory& expert) {
  expert.validate();
  if (expert.state_dim() != model.n()) {
    throw ArgumentError("trajectory_mse: state dimension mismatch");
  }
  TrajectoryFit fit;
  const Matrix ak = model.closed_loop();
  if (!ak.allFinite() || !is_hurwitz(ak)) return fit;
  fit.stable = true;
  fit.reconstructed.times = expert.times;
  fit.reconstructed.states.resize(model.n(), expert.samples());
  const Vector x0 = expert.states.col(0);
  for (Index j = 0; j < expert.samples(); ++j) {
    const double t = expert.times(j) - expert.times(0);
    fit.reconstructed.states.col(j) = expm(ak * t) * x0;
  }
  fit.reconstructed.inputs = -model.K_hat * fit.reconstructed.states;
  fit.mse = (fit.reconstructed.states - expert.states).squaredNorm() /
            static_cast<double>(expert.states.size());
  return fit;
}

struct CertificateThresholds {
  double omega_relative = 1e-6;
  double cone_slack = 1e-8;
  double gain_error = 1e-3;
  double derivative_relative = 1e-4;
  double trajectory_mse = 1e-4;
};

struct Verification {
  double omega_residual = std::numeric_limits<double>::quiet_NaN();
  ConeMargins cones;
  double min_eig_q = 0.0;
  double min_eig_p = 0.0;
  double min_eig_r = 0.0;
  double gain_error_fro = 0.0;
  AreResidual are;
  DerivativeMatchReport derivative;
  double traj_mse = std::numeric_limits<double>::infinity();
  bool stable = false;

  bool primal_ok = false;
  bool cone_ok = false;
  bool gain_ok = false;
  bool derivative_ok = false;
  bool mse_ok = false;

  /// Primal residual plus cone feasibility, the premise of the equivalence.
  bool feasible() const { return primal_ok && cone_ok; }
  bool passed() const {
    return primal_ok && cone_ok && gain_ok && derivative_ok && mse_ok;
  }
};

/// Metrics that need only the model and the expert data.
inline Verification verify_model(const RecoveredModel& model,
                                 const Eigen::Ref<const Matrix>& k_star,
                                 const Trajectory& expert,
                                 const std::vector<Vector>& reference_powers,
                                 double epsilon,
                                 const CertificateThresholds& th = {}) {
  Verification v;
  v.min_eig_q = min_eig_sym(model.Q_hat);
  v.min_eig_p = min_eig_sym(model.P_hat);
  v.min_eig_r = min_eig_sym(model.R_hat);
  v.cones = {v.min_eig_q, v.min_eig_p - epsilon, v.min_eig_r - epsilon};
  v.cone_ok = v.cones.feasible(th.cone_slack);
  v.gain_error_fro = (model.K_hat - k_star).norm();
  v.gain_ok = v.gain_error_fro <= th.gain_error;
  v.are = are_residual(model);
  v.derivative = derivative_match_check(model.closed_loop(),
                                        expert.states.col(0),
                                        reference_powers);
  v.derivative_ok = v.derivative.passed(th.derivative_relative);
  TrajectoryFit fit = trajectory_mse(model, expert);
  v.traj_mse = fit.mse;
  v.stable = fit.stable;
  v.mse_ok = fit.stable && fit.mse <= th.trajectory_mse;
  return v;
}

/// Full certificate: adds the Omega residual of the primal vector.
inline Verification verify_solution(const AssembledProblem& prob,
                                    const Eigen::Ref<const Vector>& xi,
                                    const RecoveredModel& model,
                                    const Eigen::Ref<const Matrix>& k_star,
                                    const Trajectory& expert,
                                    const std::vector<Vector>& reference_powers,
                                    const CertificateThresholds& th = {}) {
  Verification v = verify_model(model, k_star, expert, reference_powers,
                                prob.epsilon, th);
  v.omega_residual = relative_omega_residual(prob, xi);
  v.primal_ok = v.omega_residual <= th.omega_relative;
  return v;
}

}  // namespace mfioc
