#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mfioc/assembly.hpp"
#include "mfioc/bsum.hpp"
#include "mfioc/data_pipeline.hpp"
#include "mfioc/lqr.hpp"
#include "mfioc/recovery.hpp"

namespace mfioc {

struct RunConfig {
  double horizon = 8.0;
  double dt = 0.1;
  Index columns = 5;
  double epsilon = 1e-6;
  double tol = 1e-10;
  int max_iter = 5000;
  SignConvention sign = SignConvention::kStandard;
  std::uint64_t seed = 0;
  int trials = 100;
  Index n = 3;
  Index m = 2;
  DerivativeMethod derivative = DerivativeMethod::kFiniteDifference;
  int fd_accuracy = 10;
  double regularization = 1e-10;
  bool enforce_symmetry = true;
  CertificateThresholds thresholds;

  void validate() const {
    if (!(horizon > 0.0) || !(dt > 0.0) || !(horizon >= dt)) {
      throw ArgumentError("config: need horizon >= dt > 0");
    }
    if (columns < 1) throw ArgumentError("config: columns must be >= 1");
    if (!(epsilon > 0.0)) throw ArgumentError("config: epsilon must be > 0");
    if (!(tol > 0.0)) throw ArgumentError("config: tol must be > 0");
    if (max_iter < 1) throw ArgumentError("config: max_iter must be >= 1");
    if (trials < 1) throw ArgumentError("config: trials must be >= 1");
    if (n < 1 || m < 1) throw ArgumentError("config: n and m must be >= 1");
    if (fd_accuracy < 2 || fd_accuracy % 2 != 0) {
      throw ArgumentError("config: fd_accuracy must be an even integer >= 2");
    }
    if (!(regularization >= 0.0)) {
      throw ArgumentError("config: regularization must be >= 0");
    }
  }

  DualOptions dual_options() const {
    DualOptions o;
    o.epsilon = epsilon;
    o.sign = sign;
    o.regularization = regularization;
    o.enforce_symmetry = enforce_symmetry;
    return o;
  }

  SolverConfig solver_config() const {
    SolverConfig c;
    c.tol = tol;
    c.max_iter = max_iter;
    return c;
  }
};

/// Forward-model quantities available when the generating system is known.
struct GroundTruth {
  LtiSystem system;
  CostWeights cost;
  LqrSolution lqr;

  Matrix closed_loop() const { return system.A - system.B * lqr.K; }
};

struct Timings {
  double identify_ms = 0.0;
  double derivatives_ms = 0.0;
  double assembly_ms = 0.0;
  double solve_ms = 0.0;
  double verify_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  Trajectory expert;
  GainEstimate gain;
  DataMatrices data;
  AssembledProblem problem;
  SolveResult solve;
  Vector xi;
  std::optional<RecoveredModel> model;
  std::optional<Verification> verification;
  std::string recovery_error;
  std::optional<Matrix> true_gain;
  Timings timings;

  SolveStatus status() const { return solve.trace.status; }
  bool passed() const {
    return status() == SolveStatus::kConverged && verification &&
           verification->passed();
  }
};

namespace detail {

class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ =
      std::chrono::steady_clock::now();
};

inline void require_enough_samples(const Trajectory& traj,
                                   const RunConfig& cfg) {
  const Index n = traj.state_dim();
  if (cfg.derivative == DerivativeMethod::kClosedFormOracle) {
    if (traj.samples() < std::max<Index>(n, cfg.columns)) {
      throw InsufficientExcitation("trajectory has " +
                                   std::to_string(traj.samples()) +
                                   " samples, fewer than required");
    }
    return;
  }
  const Index half = centered_half_width(static_cast<int>(n), cfg.fd_accuracy);
  const Index needed =
      std::max(min_samples_for(static_cast<int>(n), cfg.fd_accuracy),
               2 * half + std::max<Index>(cfg.columns - 1, 1));
  if (traj.samples() < needed) {
    throw InsufficientExcitation(
        "trajectory has " + std::to_string(traj.samples()) +
        " samples; derivatives up to order " + std::to_string(n) +
        " at " + std::to_string(cfg.columns) + " instants need " +
        std::to_string(needed));
  }
}

}  // namespace detail

/// identify_gain -> derivatives -> data matrices -> assembly -> BSUM ->
/// reconstruct -> verify. Reference powers come from the ground truth when
/// given, else from the data itself.
inline PipelineResult run_from_trajectory(const Trajectory& expert,
                                          const RunConfig& cfg,
                                          const GroundTruth* truth = nullptr) {
  cfg.validate();
  expert.validate();
  detail::Stopwatch total;
  detail::Stopwatch watch;
  PipelineResult res;
  res.expert = expert;
  const Index n = expert.state_dim();
  const Index m = expert.input_dim();
  if (truth) res.true_gain = truth->lqr.K;

  detail::require_enough_samples(expert, cfg);
  res.gain = identify_gain(expert);
  res.timings.identify_ms = watch.lap_ms();

  DerivativeOptions dopts;
  dopts.method = cfg.derivative;
  dopts.accuracy = cfg.fd_accuracy;
  if (cfg.derivative == DerivativeMethod::kClosedFormOracle) {
    if (!truth) {
      throw ArgumentError("oracle derivatives need a known system");
    }
    dopts.closed_loop = truth->closed_loop();
  }
  const DerivativeSamples derivs =
      estimate_derivatives(expert, static_cast<int>(n), dopts);
  res.data = build_data_matrices(derivs, cfg.columns);
  res.timings.derivatives_ms = watch.lap_ms();

  const DecisionLayout layout = build_layout(n, m);
  res.problem = build_dual(build_omega(res.gain.K, res.data, layout), layout,
                           cfg.dual_options());
  res.timings.assembly_ms = watch.lap_ms();

  res.solve = solve(res.problem, cfg.solver_config());
  res.xi = recover_primal(res.solve.state, res.problem);
  res.timings.solve_ms = watch.lap_ms();

  try {
    res.model = reconstruct(res.xi, res.gain.K, layout, cfg.epsilon);
  } catch (const RecoveryFailure& e) {
    res.recovery_error = e.what();
  }
  if (res.model) {
    const std::vector<Vector> reference =
        truth ? closed_loop_powers(truth->closed_loop(), expert.states.col(0),
                                   static_cast<int>(n))
              : data_powers(res.data);
    res.verification =
        verify_solution(res.problem, res.xi, *res.model, res.gain.K, expert,
                        reference, cfg.thresholds);
  }
  res.timings.verify_ms = watch.lap_ms();
  res.timings.total_ms = total.lap_ms();
  return res;
}

inline GroundTruth make_ground_truth(const LtiSystem& sys,
                                     const CostWeights& cost) {
  return GroundTruth{sys, cost, solve_care(sys, cost)};
}

/// Forward solve, expert simulation and the inverse pipeline in one call.
inline PipelineResult run_pipeline(const LtiSystem& sys,
                                   const CostWeights& cost,
                                   const Eigen::Ref<const Vector>& x0,
                                   const RunConfig& cfg) {
  cfg.validate();
  const GroundTruth truth = make_ground_truth(sys, cost);
  const Trajectory expert =
      simulate_closed_loop(sys, truth.lqr.K, x0, cfg.horizon, cfg.dt);
  return run_from_trajectory(expert, cfg, &truth);
}

struct MultiResult {
  GainEstimate gain;
  Matrix closed_loop;
  AssembledProblem problem;
  SolveResult solve;
  Vector xi;
  std::optional<RecoveredModel> model;
  std::optional<Verification> verification;
  std::string recovery_error;
};

/// Variant for l >= n expert trajectories: A_K is estimated directly and the
/// G block disappears from the decision vector.
inline MultiResult run_multi(std::span<const Trajectory> trajs,
                             const RunConfig& cfg) {
  cfg.validate();
  if (trajs.empty()) throw ArgumentError("multi-trajectory: no trajectories");
  const Index n = trajs[0].state_dim();
  const Index m = trajs[0].input_dim();
  Index total = 0;
  for (const Trajectory& t : trajs) {
    t.validate();
    if (t.state_dim() != n || t.input_dim() != m) {
      throw ArgumentError("multi-trajectory: inconsistent dimensions");
    }
    total += t.samples();
  }
  Trajectory pooled;
  pooled.times = Vector::LinSpaced(total, 0.0, static_cast<double>(total - 1));
  pooled.states.resize(n, total);
  pooled.inputs.resize(m, total);
  Index at = 0;
  for (const Trajectory& t : trajs) {
    pooled.states.middleCols(at, t.samples()) = t.states;
    pooled.inputs.middleCols(at, t.samples()) = t.inputs;
    at += t.samples();
  }

  MultiResult res;
  res.gain = identify_gain(pooled);
  DerivativeOptions dopts;
  dopts.accuracy = cfg.fd_accuracy;
  res.closed_loop = multi_traj_closed_loop(trajs, dopts, 0);

  const DecisionLayout layout = build_layout(n, m, false);
  res.problem = build_dual(assemble_multi(res.gain.K, res.closed_loop, layout),
                           layout, cfg.dual_options());
  res.solve = solve(res.problem, cfg.solver_config());
  res.xi = recover_primal(res.solve.state, res.problem);
  try {
    res.model = reconstruct(res.xi, res.gain.K, layout, cfg.epsilon);
  } catch (const RecoveryFailure& e) {
    res.recovery_error = e.what();
  }
  if (res.model) {
    const Trajectory& first = trajs[0];
    res.verification = verify_solution(
        res.problem, res.xi, *res.model, res.gain.K, first,
        closed_loop_powers(res.closed_loop, first.states.col(0),
                           static_cast<int>(n)),
        cfg.thresholds);
  }
  return res;
}

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status;
  int iterations = 0;
  double gain_error = std::numeric_limits<double>::infinity();
  double mse = std::numeric_limits<double>::infinity();
  double omega_residual = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
  std::string error;

  bool converged() const { return status == to_string(SolveStatus::kConverged); }
};

struct MonteCarloSummary {
  std::vector<TrialRecord> trials;
  double median_mse = std::numeric_limits<double>::quiet_NaN();
  double mean_mse = std::numeric_limits<double>::quiet_NaN();
  double max_mse = std::numeric_limits<double>::quiet_NaN();
  double std_mse = std::numeric_limits<double>::quiet_NaN();
  int converged = 0;
  int failures = 0;
};

/// Statistics over the finite MSE values; failures counts trials that did
/// not converge or produced no finite MSE.
inline void summarize(MonteCarloSummary& s) {
  std::vector<double> mse;
  s.converged = 0;
  s.failures = 0;
  for (const TrialRecord& r : s.trials) {
    if (r.converged()) ++s.converged;
    if (!r.converged() || !std::isfinite(r.mse)) ++s.failures;
    if (std::isfinite(r.mse)) mse.push_back(r.mse);
  }
  if (mse.empty()) return;
  std::sort(mse.begin(), mse.end());
  const std::size_t k = mse.size();
  s.median_mse = k % 2 == 1 ? mse[k / 2] : 0.5 * (mse[k / 2 - 1] + mse[k / 2]);
  double sum = 0.0;
  for (double v : mse) sum += v;
  s.mean_mse = sum / static_cast<double>(k);
  s.max_mse = mse.back();
  double sq = 0.0;
  for (double v : mse) sq += (v - s.mean_mse) * (v - s.mean_mse);
  s.std_mse = std::sqrt(sq / static_cast<double>(k));
}

inline TrialRecord run_trial(int trial, std::uint64_t seed,
                             const RunConfig& cfg) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = seed;
  try {
    const RandomInstance inst = random_system(cfg.n, cfg.m, seed);
    const PipelineResult res =
        run_pipeline(inst.system, inst.cost, inst.x0, cfg);
    rec.status = to_string(res.status());
    rec.iterations = res.solve.trace.cycles();
    if (res.verification) {
      rec.gain_error = res.verification->gain_error_fro;
      rec.mse = res.verification->traj_mse;
      rec.omega_residual = res.verification->omega_residual;
      rec.passed = res.passed();
    } else {
      rec.error = res.recovery_error;
    }
  } catch (const Error& e) {
    rec.status = std::string("error:") + to_string(e.kind());
    rec.error = e.what();
  }
  return rec;
}

/// Trial i uses seed0 + i. Trials run on up to `workers` threads (0 picks
/// the hardware concurrency); rows are ordered by trial index.
inline MonteCarloSummary run_montecarlo(const RunConfig& cfg,
                                        std::uint64_t seed0,
                                        unsigned workers = 0) {
  cfg.validate();
  MonteCarloSummary summary;
  summary.trials.resize(static_cast<std::size_t>(cfg.trials));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.trials));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < cfg.trials; i = next++) {
      summary.trials[static_cast<std::size_t>(i)] =
          run_trial(i, seed0 + static_cast<std::uint64_t>(i), cfg);
    }
  };
  std::vector<std::future<void>> pool;
  for (unsigned w = 1; w < workers; ++w) {
    pool.push_back(std::async(std::launch::async, worker));
  }
  worker();
  for (auto& f : pool) f.get();
  summarize(summary);
  return summary;
}

}  // namespace mfioc
