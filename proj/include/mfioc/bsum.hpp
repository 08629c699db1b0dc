#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfioc/assembly.hpp"
#include "mfioc/linalg.hpp"

namespace mfioc {

/// Multipliers for the three PSD cone constraints, each stored vectorized.
struct DualState {
  Vector lambda_q;
  Vector lambda_p;
  Vector lambda_r;
  int iteration = 0;

  static DualState zeros(const DecisionLayout& layout) {
    DualState s;
    s.lambda_q = Vector::Zero(layout.n * layout.n);
    s.lambda_p = Vector::Zero(layout.n * layout.n);
    s.lambda_r = Vector::Zero(layout.m * layout.m);
    return s;
  }

  Vector stacked() const {
    Vector v(lambda_q.size() + lambda_p.size() + lambda_r.size());
    v << lambda_q, lambda_p, lambda_r;
    return v;
  }
};

struct SolverConfig {
  double tol = 1e-10;  // on ||dlambda|| / ||lambda||
  int max_iter = 5000;
  double alpha_floor = 1e-12;
  double primal_tol = 1e-9;  // ||Omega xi|| / (||Omega|| ||xi||)
  int primal_check_every = 10;
  double cone_slack = 1e-8;
};

enum class SolveStatus { kConverged, kMaxIter, kDegenerateZero };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max-iter";
    case SolveStatus::kDegenerateZero: return "degenerate-zero";
  }
  return "unknown";
}

struct TraceRecord {
  int iter = 0;
  double dual_obj = 0.0;
  double step_norm = 0.0;
  double elapsed_ms = 0.0;
};

/// Empirical view of the O(1/k) bound: g_k = J(lambda^k) - J(lambda^final).
struct RateDiagnostics {
  double sup_k_gap = std::numeric_limits<double>::quiet_NaN();
  double loglog_slope = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;  // records[0] is the starting point
  SolveStatus status = SolveStatus::kMaxIter;
  RateDiagnostics rate;

  int cycles() const {
    return records.empty() ? 0 : records.back().iter;
  }
};

struct StepCoefficients {
  double alpha = 0.0;  // Q block
  double beta = 0.0;   // P block
  double gamma = 0.0;  // R block
};

inline StepCoefficients step_coefficients(const AssembledProblem& prob,
                                          double alpha_floor = 1e-12) {
  StepCoefficients c;
  c.alpha = std::max(max_eig_sym(prob.h_qq()), alpha_floor);
  c.beta = std::max(max_eig_sym(prob.h_pp()), alpha_floor);
  c.gamma = std::max(max_eig_sym(prob.h_rr()), alpha_floor);
  return c;
}

namespace detail {

inline double sign_factor(SignConvention s) {
  return s == SignConvention::kStandard ? 1.0 : -1.0;
}

/// Proximal step on one block: project
///   lambda_b - (1/(2c)) H_b lambda  +/-  W_b / c
/// onto the PSD cone (shift sign follows the convention).
inline Vector block_update(const AssembledProblem& prob,
                           const Vector& lambda, Index offset, Index length,
                           Index side, double coeff) {
  const Vector h_lambda = prob.h_dual.middleRows(offset, length) * lambda;
  Vector delta = lambda.segment(offset, length) - h_lambda / (2.0 * coeff);
  delta += sign_factor(prob.sign) * prob.w_offset.segment(offset, length) /
           coeff;
  if (!delta.allFinite()) {
    throw NumericalBreakdown("bsum: non-finite block update");
  }
  return vectorize(psd_project(unvectorize(delta, side, side)));
}

}  // namespace detail

/// One Gauss-Seidel sweep Q -> P -> R, each block using the freshest values.
inline DualState bsum_cycle(const DualState& state,
                            const AssembledProblem& prob,
                            const StepCoefficients& coeffs) {
  const Index n = prob.layout.n;
  const Index m = prob.layout.m;
  Vector lambda = state.stacked();
  lambda.segment(0, prob.nq()) =
      detail::block_update(prob, lambda, 0, prob.nq(), n, coeffs.alpha);
  lambda.segment(prob.nq(), prob.np()) = detail::block_update(
      prob, lambda, prob.nq(), prob.np(), n, coeffs.beta);
  lambda.segment(prob.nq() + prob.np(), prob.nr()) = detail::block_update(
      prob, lambda, prob.nq() + prob.np(), prob.nr(), m, coeffs.gamma);

  DualState next;
  next.lambda_q = lambda.segment(0, prob.nq());
  next.lambda_p = lambda.segment(prob.nq(), prob.np());
  next.lambda_r = lambda.segment(prob.nq() + prob.np(), prob.nr());
  next.iteration = state.iteration + 1;
  return next;
}

inline DualState bsum_cycle(const DualState& state,
                            const AssembledProblem& prob) {
  return bsum_cycle(state, prob, step_coefficients(prob));
}

/// 1/4 l'Hl - l'W (standard) or 1/4 l'Hl + l'W (paper). The cone indicators
/// vanish on iterates, which are PSD by construction.
inline double dual_objective(const DualState& state,
                             const AssembledProblem& prob) {
  const Vector lambda = state.stacked();
  return 0.25 * lambda.dot(prob.h_dual * lambda) -
         detail::sign_factor(prob.sign) * lambda.dot(prob.w_offset);
}

/// xi*(lambda) = +/- 1/2 gram^+ U' lambda.
inline Vector recover_primal(const DualState& state,
                             const AssembledProblem& prob) {
  return detail::sign_factor(prob.sign) * 0.5 *
         (prob.gram_pinv * (prob.u_select.transpose() * state.stacked()));
}

/// Largest relative prox residual ||l_b - Proj(l_b - grad_b / c_b)||; zero
/// exactly at points satisfying each block's optimality inclusion.
inline double blockwise_optimality_residual(const DualState& state,
                                            const AssembledProblem& prob,
                                            const StepCoefficients& coeffs) {
  const Vector lambda = state.stacked();
  const Vector grad = 0.5 * (prob.h_dual * lambda) -
                      detail::sign_factor(prob.sign) * prob.w_offset;
  const Index offsets[3] = {0, prob.nq(), prob.nq() + prob.np()};
  const Index lengths[3] = {prob.nq(), prob.np(), prob.nr()};
  const Index sides[3] = {prob.layout.n, prob.layout.n, prob.layout.m};
  const double cs[3] = {coeffs.alpha, coeffs.beta, coeffs.gamma};
  double worst = 0.0;
  for (int b = 0; b < 3; ++b) {
    const Vector lb = lambda.segment(offsets[b], lengths[b]);
    const Vector trial = lb - grad.segment(offsets[b], lengths[b]) / cs[b];
    const Vector proj =
        vectorize(psd_project(unvectorize(trial, sides[b], sides[b])));
    const double scale = std::max(lb.norm(), 1e-300);
    worst = std::max(worst, (lb - proj).norm() / scale);
  }
  return worst;
}

/// ||Omega xi|| / (||Omega|| ||xi||), or +inf for xi = 0.
inline double relative_omega_residual(const AssembledProblem& prob,
                                      const Vector& xi) {
  const double denom = prob.omega.norm() * xi.norm();
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return (prob.omega * xi).norm() / denom;
}

/// Smallest eigenvalue margins of the recovered (Q, P - eps I, R - eps I).
struct ConeMargins {
  double q = 0.0;
  double p = 0.0;
  double r = 0.0;

  bool feasible(double slack) const {
    return q >= -slack && p >= -slack && r >= -slack;
  }
};

inline ConeMargins cone_margins(const AssembledProblem& prob,
                                const Vector& xi) {
  const auto& l = prob.layout;
  ConeMargins c;
  c.q = min_eig_sym(l.block(xi, l.q(), l.n));
  c.p = min_eig_sym(l.block(xi, l.p(), l.n)) - prob.epsilon;
  c.r = min_eig_sym(l.block(xi, l.r(), l.m)) - prob.epsilon;
  return c;
}

inline RateDiagnostics rate_diagnostics(const ConvergenceTrace& trace) {
  RateDiagnostics out;
  if (trace.records.size() < 3) return out;
  const double final_obj = trace.records.back().dual_obj;
  const double initial_gap = trace.records.front().dual_obj - final_obj;
  double sup = 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  for (std::size_t i = 1; i + 1 < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    const double gap = r.dual_obj - final_obj;
    sup = std::max(sup, r.iter * gap);
    // Drop gaps at rounding level; they only add noise to the fit.
    if (gap > 1e-12 * std::abs(initial_gap) && gap > 0.0) {
      const double x = std::log(static_cast<double>(r.iter));
      const double y = std::log(gap);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++pts;
    }
  }
  out.sup_k_gap = sup;
  out.points = pts;
  if (pts >= 2) {
    const double denom = pts * sxx - sx * sx;
    if (denom > 0.0) out.loglog_slope = (pts * sxy - sx * sy) / denom;
  }
  return out;
}

/// Called with every iterate produced by solve(), in order.
using IterateObserver = std::function<void(const DualState&)>;

struct SolveResult {
  DualState state;
  ConvergenceTrace trace;
  StepCoefficients coeffs;
};

/// Cyclic BSUM on the dual until the relative step norm drops below tol, the
/// recovered primal is feasible to primal_tol, or max_iter cycles elapse.
inline SolveResult solve(const AssembledProblem& prob,
                         const SolverConfig& cfg = {},
                         std::optional<DualState> start = std::nullopt,
                         const IterateObserver& observe = {}) {
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) {
    throw ArgumentError("solve: need tol > 0 and max_iter >= 1");
  }
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0)
        .count();
  };

  SolveResult res;
  res.coeffs = step_coefficients(prob, cfg.alpha_floor);
  res.state = start ? *start : DualState::zeros(prob.layout);
  res.state.iteration = 0;
  res.trace.records.push_back({0, dual_objective(res.state, prob), 0.0, 0.0});

  bool converged = false;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    DualState next = bsum_cycle(res.state, prob, res.coeffs);
    const double step = (next.stacked() - res.state.stacked()).norm();
    const double scale = next.stacked().norm();
    res.state = std::move(next);
    if (observe) observe(res.state);
    res.trace.records.push_back(
        {k, dual_objective(res.state, prob), step, elapsed_ms()});
    if (step <= cfg.tol * scale) {
      converged = true;
      break;
    }
    if (cfg.primal_check_every > 0 && k % cfg.primal_check_every == 0) {
      const Vector xi = recover_primal(res.state, prob);
      if (relative_omega_residual(prob, xi) <= cfg.primal_tol &&
          cone_margins(prob, xi).feasible(cfg.cone_slack)) {
        converged = true;
        break;
      }
    }
  }

  const Vector xi = recover_primal(res.state, prob);
  if (xi.lpNorm<Eigen::Infinity>() <= 1e-3 * prob.epsilon) {
    res.trace.status = SolveStatus::kDegenerateZero;
  } else {
    res.trace.status =
        converged ? SolveStatus::kConverged : SolveStatus::kMaxIter;
  }
  res.trace.rate = rate_diagnostics(res.trace);
  return res;
}

inline void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "iter,dual_obj,step_norm,elapsed_ms\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << detail::format_double(r.dual_obj) << ','
        << detail::format_double(r.step_norm) << ','
        << detail::format_double(r.elapsed_ms) << '\n';
  }
}

inline void write_trace_csv(const std::string& path,
                            const ConvergenceTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  write_trace_csv(out, trace);
}

}  // namespace mfioc
