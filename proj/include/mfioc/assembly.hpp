#pragma once

#include <fstream>
#include <string>

#include "mfioc/data_pipeline.hpp"
#include "mfioc/linalg.hpp"

namespace mfioc {

struct Segment {
  Index offset = 0;
  Index length = 0;
};

/// Decision vector xi = [vec Z | vec R | vec Q | vec P | vec G]. The
/// multi-trajectory variant drops the G segment.
struct DecisionLayout {
  Index n = 0;
  Index m = 0;
  bool with_g = true;

  Segment z() const { return {0, n * n}; }
  Segment r() const { return {n * n, m * m}; }
  Segment q() const { return {n * n + m * m, n * n}; }
  Segment p() const { return {2 * n * n + m * m, n * n}; }
  Segment g() const { return {3 * n * n + m * m, with_g ? n * n : 0}; }
  Index dim() const { return (with_g ? 4 : 3) * n * n + m * m; }

  /// Length of the stacked multiplier (lambda_Q, lambda_P, lambda_R).
  Index dual_dim() const { return 2 * n * n + m * m; }

  Matrix block(const Eigen::Ref<const Vector>& xi, Segment s,
               Index side) const {
    return unvectorize(xi.segment(s.offset, s.length), side, side);
  }
};

inline DecisionLayout build_layout(Index n, Index m, bool with_g = true) {
  if (n < 1 || m < 1) throw ArgumentError("layout: n and m must be >= 1");
  return DecisionLayout{n, m, with_g};
}

namespace detail {

inline void check_gain(const Eigen::Ref<const Matrix>& k,
                       const DecisionLayout& layout, const char* who) {
  if (k.rows() != layout.m || k.cols() != layout.n) {
    throw ArgumentError(std::string(who) + ": K* must be " +
                        std::to_string(layout.m) + "x" +
                        std::to_string(layout.n));
  }
}

/// Rows shared by both assemblies:
///   (Y + I) vec Z - (K^T kron K^T) vec R + vec Q = 0
///   Y vec Z - (K^T kron K^T) vec R - [second-block term] = 0
inline void fill_riccati_rows(Matrix& omega, const Eigen::Ref<const Matrix>& k,
                              const DecisionLayout& layout) {
  const Index nn = layout.n * layout.n;
  const Matrix y = commutation_matrix(layout.n);
  const Matrix kk = kron(k.transpose(), k.transpose());
  const Matrix eye = Matrix::Identity(nn, nn);
  omega.block(0, layout.z().offset, nn, nn) = y + eye;
  omega.block(0, layout.r().offset, nn, layout.r().length) = -kk;
  omega.block(0, layout.q().offset, nn, nn) = eye;
  omega.block(nn, layout.z().offset, nn, nn) = y;
  omega.block(nn, layout.r().offset, nn, layout.r().length) = -kk;
}

}  // namespace detail

/// Constraint matrix of the single-trajectory feasibility problem; every
/// feasible xi satisfies omega * xi = 0.
inline Matrix build_omega(const Eigen::Ref<const Matrix>& k_star,
                          const DataMatrices& dm,
                          const DecisionLayout& layout) {
  if (!layout.with_g) {
    throw ArgumentError("build_omega: layout must carry the G segment");
  }
  detail::check_gain(k_star, layout, "build_omega");
  const Index n = layout.n;
  const Index nn = n * n;
  if (dm.lambda_bar_1.rows() != n || dm.lambda_bar_2.rows() != n ||
      dm.lambda_bar_1.cols() != dm.lambda_bar_2.cols()) {
    throw ArgumentError("build_omega: data matrices do not match n");
  }
  const Index data_rows = n * dm.lambda_bar_1.cols();
  Matrix omega = Matrix::Zero(2 * nn + data_rows, layout.dim());
  detail::fill_riccati_rows(omega, k_star, layout);
  const Matrix eye_n = Matrix::Identity(n, n);
  omega.block(nn, layout.g().offset, nn, nn) = -Matrix::Identity(nn, nn);
  omega.block(2 * nn, layout.p().offset, data_rows, nn) =
      -kron(dm.lambda_bar_2.transpose(), eye_n);
  omega.block(2 * nn, layout.g().offset, data_rows, nn) =
      kron(dm.lambda_bar_1.transpose(), eye_n);
  return omega;
}

/// Multi-trajectory variant: with A_K known, the second block becomes
/// Z^T - K^T R K - P A_K = 0 and G disappears.
inline Matrix assemble_multi(const Eigen::Ref<const Matrix>& k_star,
                             const Eigen::Ref<const Matrix>& a_k,
                             const DecisionLayout& layout) {
  if (layout.with_g) {
    throw ArgumentError("assemble_multi: layout must not carry G");
  }
  detail::check_gain(k_star, layout, "assemble_multi");
  if (a_k.rows() != layout.n || a_k.cols() != layout.n) {
    throw ArgumentError("assemble_multi: A_K must be n x n");
  }
  const Index nn = layout.n * layout.n;
  Matrix omega = Matrix::Zero(2 * nn, layout.dim());
  detail::fill_riccati_rows(omega, k_star, layout);
  omega.block(nn, layout.p().offset, nn, nn) =
      -kron(a_k.transpose(), Matrix::Identity(layout.n, layout.n));
  return omega;
}

/// U = [U_Q; U_P; U_R]: picks vec Q, vec P, vec R out of xi.
inline Matrix selection_matrix(const DecisionLayout& layout) {
  const Index nn = layout.n * layout.n;
  const Index mm = layout.m * layout.m;
  Matrix u = Matrix::Zero(layout.dual_dim(), layout.dim());
  u.block(0, layout.q().offset, nn, nn).setIdentity();
  u.block(nn, layout.p().offset, nn, nn).setIdentity();
  u.block(2 * nn, layout.r().offset, mm, mm).setIdentity();
  return u;
}

/// (I - Y) rows forcing the Q, P and R segments to be symmetric.
inline Matrix symmetry_rows(const DecisionLayout& layout) {
  const Index nn = layout.n * layout.n;
  const Index mm = layout.m * layout.m;
  const Matrix skew_n = Matrix::Identity(nn, nn) - commutation_matrix(layout.n);
  const Matrix skew_m = Matrix::Identity(mm, mm) - commutation_matrix(layout.m);
  Matrix s = Matrix::Zero(layout.dual_dim(), layout.dim());
  s.block(0, layout.q().offset, nn, nn) = skew_n;
  s.block(nn, layout.p().offset, nn, nn) = skew_n;
  s.block(2 * nn, layout.r().offset, mm, mm) = skew_m;
  return s;
}

/// kStandard: min 1/4 l'Hl - l'W, xi = +1/2 G^+ U' l.
/// kPaper: min 1/4 l'Hl + l'W, xi = -1/2 G^+ U' l (literal transcription;
/// its minimizer is l = 0).
enum class SignConvention { kStandard, kPaper };

inline const char* to_string(SignConvention s) {
  return s == SignConvention::kStandard ? "standard" : "paper";
}

struct DualOptions {
  double epsilon = 1e-6;
  SignConvention sign = SignConvention::kStandard;
  /// Tikhonov weight relative to the largest eigenvalue of the Gram matrix.
  /// Zero reproduces the bare pseudoinverse.
  double regularization = 1e-10;
  /// Adds (I - Y) rows so the Q, P, R segments come out symmetric.
  bool enforce_symmetry = true;
  double pinv_rtol = kDefaultPinvRtol;
};

/// Everything the BSUM iterations need, built once per instance. The
/// Gram pseudoinverse is cached so a cycle costs only matrix-vector work.
struct AssembledProblem {
  DecisionLayout layout;
  Matrix omega;
  Matrix symmetry;  // empty when symmetry rows are disabled
  Matrix u_select;
  Vector w_offset;
  Matrix gram_pinv;  // (Omega'Omega + S'S + rho I)^+
  Matrix h_dual;     // U gram_pinv U'
  double epsilon = 1e-6;
  double rho = 0.0;
  SignConvention sign = SignConvention::kStandard;

  Index nq() const { return layout.n * layout.n; }
  Index np() const { return layout.n * layout.n; }
  Index nr() const { return layout.m * layout.m; }

  auto h_qq() const { return h_dual.block(0, 0, nq(), nq()); }
  auto h_qp() const { return h_dual.block(0, nq(), nq(), np()); }
  auto h_qr() const { return h_dual.block(0, nq() + np(), nq(), nr()); }
  auto h_pp() const { return h_dual.block(nq(), nq(), np(), np()); }
  auto h_pr() const { return h_dual.block(nq(), nq() + np(), np(), nr()); }
  auto h_rr() const {
    return h_dual.block(nq() + np(), nq() + np(), nr(), nr());
  }
};

inline AssembledProblem build_dual(const Matrix& omega,
                                   const DecisionLayout& layout,
                                   const DualOptions& opts = {}) {
  if (!(opts.epsilon > 0.0)) {
    throw ArgumentError("build_dual: epsilon must be positive");
  }
  if (!(opts.regularization >= 0.0)) {
    throw ArgumentError("build_dual: regularization must be non-negative");
  }
  if (omega.cols() != layout.dim()) {
    throw ArgumentError("build_dual: omega has " +
                        std::to_string(omega.cols()) + " columns, layout " +
                        std::to_string(layout.dim()));
  }
  if (!omega.allFinite()) {
    throw NumericalBreakdown("build_dual: omega has non-finite entries");
  }
  AssembledProblem prob;
  prob.layout = layout;
  prob.omega = omega;
  prob.epsilon = opts.epsilon;
  prob.sign = opts.sign;
  prob.u_select = selection_matrix(layout);

  const Index nn = layout.n * layout.n;
  prob.w_offset = Vector::Zero(layout.dual_dim());
  prob.w_offset.segment(nn, nn) =
      vectorize(opts.epsilon * Matrix::Identity(layout.n, layout.n));
  prob.w_offset.segment(2 * nn, layout.m * layout.m) =
      vectorize(opts.epsilon * Matrix::Identity(layout.m, layout.m));

  Matrix gram = omega.transpose() * omega;
  if (opts.enforce_symmetry) {
    prob.symmetry = symmetry_rows(layout);
    gram += prob.symmetry.transpose() * prob.symmetry;
  }
  gram = symmetrize(gram);
  if (opts.regularization > 0.0) {
    prob.rho = opts.regularization * std::max(max_eig_sym(gram), 1e-300);
    gram.diagonal().array() += prob.rho;
  }
  prob.gram_pinv = symmetrize(pinv(gram, opts.pinv_rtol));
  prob.h_dual =
      symmetrize(prob.u_select * prob.gram_pinv * prob.u_select.transpose());
  return prob;
}

inline void write_matrix_csv(const std::string& path,
                             const Eigen::Ref<const Matrix>& m) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

/// Writes omega.csv, h_dual.csv and w_offset.csv into `dir`.
inline void dump_problem_csv(const std::string& dir,
                             const AssembledProblem& prob) {
  write_matrix_csv(dir + "/omega.csv", prob.omega);
  write_matrix_csv(dir + "/h_dual.csv", prob.h_dual);
  write_matrix_csv(dir + "/w_offset.csv", prob.w_offset);
}

}  // namespace mfioc
