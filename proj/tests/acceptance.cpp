#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mfioc/mfioc.hpp"

namespace {

using namespace mfioc;

constexpr std::uint64_t kMonteCarloSeed0 = 0;
constexpr int kMonteCarloTrials = 100;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, const Outcome& o) {
  std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name,
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Outcome nominal_reproduction(const PipelineResult& res) {
  Outcome o;
  const double printed_dev =
      (res.gain.K - nominal::printed_gain()).cwiseAbs().maxCoeff();
  const double gain_err = res.verification
                              ? res.verification->gain_error_fro
                              : std::numeric_limits<double>::infinity();
  const double mse = res.verification ? res.verification->traj_mse
                                      : std::numeric_limits<double>::infinity();
  const int cycles = res.solve.trace.cycles();
  o.pass = res.status() == SolveStatus::kConverged && printed_dev <= 1e-3 &&
           gain_err <= 1e-3 && mse <= 1e-5 && cycles <= 500;
  o.detail = "K* vs printed max|dev| " + fmt("%.2e", printed_dev) +
             " (<=1e-3), gain error " + fmt("%.2e", gain_err) +
             " (<=1e-3), MSE " + fmt("%.2e", mse) + " (<=1e-5), cycles " +
             std::to_string(cycles) + " (<=500), status " +
             to_string(res.status());
  return o;
}

Outcome feasibility_oracle() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RandomInstance r = random_system(3, 2, seed);
    const LqrSolution lqr = solve_care(r.system, r.cost);
    const Trajectory traj =
        simulate_closed_loop(r.system, lqr.K, r.x0, 8.0, 0.1);
    DerivativeOptions opts;
    opts.method = DerivativeMethod::kClosedFormOracle;
    opts.closed_loop = r.system.A - r.system.B * lqr.K;
    const DataMatrices dm =
        build_data_matrices(estimate_derivatives(traj, 3, opts), 5);
    const DecisionLayout layout = build_layout(3, 2);
    const Matrix omega = build_omega(lqr.K, dm, layout);
    const Vector xi0 = ground_truth_xi(r.system, r.cost, lqr, layout);
    worst = std::max(worst,
                     (omega * xi0).norm() / (omega.norm() * xi0.norm()));
  }
  o.pass = worst <= 1e-8;
  o.detail = "20 random systems, max ||Omega xi0|| / (||Omega|| ||xi0||) = " +
             fmt("%.2e", worst) + " (<=1e-8)";
  return o;
}

struct SolvedInstance {
  PipelineResult result;
  double worst_ascent = -std::numeric_limits<double>::infinity();
  double worst_block_eig = std::numeric_limits<double>::infinity();
};

SolvedInstance solve_instance(const LtiSystem& sys, const CostWeights& cost,
                              const Vector& x0, const RunConfig& cfg) {
  SolvedInstance s;
  s.result = run_pipeline(sys, cost, x0, cfg);
  const auto& recs = s.result.solve.trace.records;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    s.worst_ascent =
        std::max(s.worst_ascent, recs[k].dual_obj - recs[k - 1].dual_obj);
  }
  const DecisionLayout& l = s.result.problem.layout;
  auto observe = [&](const DualState& st) {
    s.worst_block_eig = std::min(
        {s.worst_block_eig, min_eig_sym(unvectorize(st.lambda_q, l.n, l.n)),
         min_eig_sym(unvectorize(st.lambda_p, l.n, l.n)),
         min_eig_sym(unvectorize(st.lambda_r, l.m, l.m))});
  };
  (void)solve(s.result.problem, cfg.solver_config(), std::nullopt, observe);
  return s;
}

Outcome descent(const std::vector<SolvedInstance>& runs) {
  Outcome o;
  double ascent = -std::numeric_limits<double>::infinity();
  double eig = std::numeric_limits<double>::infinity();
  for (const SolvedInstance& s : runs) {
    ascent = std::max(ascent, s.worst_ascent);
    eig = std::min(eig, s.worst_block_eig);
  }
  o.pass = ascent <= 1e-12 && eig >= -1e-10;
  o.detail = std::to_string(runs.size()) +
             " solves, max per-cycle objective increase " +
             fmt("%.2e", ascent) + " (<=1e-12), min iterate block eig " +
             fmt("%.2e", eig) + " (>=-1e-10)";
  return o;
}

Outcome equivalence(const std::vector<SolvedInstance>& runs) {
  Outcome o;
  int converged = 0;
  int feasible = 0;
  int violations = 0;
  double gain = 0.0, deriv = 0.0, mse = 0.0;
  for (const SolvedInstance& s : runs) {
    const PipelineResult& r = s.result;
    if (r.status() != SolveStatus::kConverged) continue;
    ++converged;
    if (!r.verification || !r.verification->feasible()) continue;
    ++feasible;
    const Verification& v = *r.verification;
    gain = std::max(gain, v.gain_error_fro);
    deriv = std::max(deriv, v.derivative.max_relative);
    mse = std::max(mse, v.traj_mse);
    if (!(v.gain_ok && v.derivative_ok && v.mse_ok)) ++violations;
  }
  o.pass = feasible > 0 && violations == 0;
  o.detail = std::to_string(converged) + " converged, " +
             std::to_string(feasible) + " satisfy the premise, " +
             std::to_string(violations) + " implication violations; max gain " +
             fmt("%.2e", gain) + " (<=1e-3), max derivative mismatch " +
             fmt("%.2e", deriv) + " (<=1e-4), max MSE " + fmt("%.2e", mse) +
             " (<=1e-4)";
  return o;
}

Outcome monte_carlo(const MonteCarloSummary& s) {
  Outcome o;
  o.pass = s.median_mse <= 1e-4 && s.converged >= 95;
  o.detail = std::to_string(s.trials.size()) + " trials (seed0 " +
             std::to_string(kMonteCarloSeed0) + "), median MSE " +
             fmt("%.2e", s.median_mse) + " (<=1e-4), converged " +
             std::to_string(s.converged) + " (>=95), mean " +
             fmt("%.2e", s.mean_mse) + ", max " + fmt("%.2e", s.max_mse);
  return o;
}

Outcome rate_diagnostic(const SolvedInstance& nominal_run) {
  Outcome o;
  const RateDiagnostics& r = nominal_run.result.solve.trace.rate;
  o.pass = std::isfinite(r.sup_k_gap) && std::isfinite(r.loglog_slope) &&
           r.points >= 2 && nominal_run.worst_ascent <= 1e-12;
  o.detail = "nominal run sup_k k*(J_k - J_final) = " +
             fmt("%.3e", r.sup_k_gap) + ", log-log slope " +
             fmt("%.3f", r.loglog_slope) + " over " +
             std::to_string(r.points) + " points, monotone";
  return o;
}

Outcome unit_properties() {
  std::mt19937_64 rng(2024);
  int failures = 0;
  std::string first;
  auto check = [&](bool ok, const char* what) {
    if (!ok && failures++ == 0) first = what;
  };

  for (Index n = 1; n <= 6; ++n) {
    const Matrix y = commutation_matrix(n);
    check((y * y - Matrix::Identity(n * n, n * n)).norm() == 0.0,
          "commutation involution");
    const Matrix z = random_matrix(n, n, rng);
    check((y * vectorize(z) - vectorize(z.transpose())).norm() == 0.0,
          "commutation transpose");
  }
  for (Index r = 1; r <= 4; ++r) {
    for (Index c = 1; c <= 4; ++c) {
      const Matrix m = random_matrix(r, c, rng);
      check(unvectorize(vectorize(m), r, c) == m, "vec round trip");
    }
  }
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_matrix(3, 3, rng);
    const Matrix x = random_matrix(3, 3, rng);
    const Matrix b = random_matrix(3, 3, rng);
    check((vectorize(a * x * b) - kron(b.transpose(), a) * vectorize(x))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12,
          "kron vectorization identity");
  }
  for (int t = 0; t < 20; ++t) {
    const Matrix m = random_matrix(6, 2, rng) * random_matrix(2, 4, rng);
    const Matrix p = pinv(m);
    check((m * p * m - m).norm() <= 1e-9 * m.norm(), "pinv M M+ M = M");
    check((p * m * p - p).norm() <= 1e-9 * p.norm(), "pinv M+ M M+ = M+");
    check(((m * p).transpose() - m * p).norm() <= 1e-9, "pinv (M M+)' = M M+");
    check(((p * m).transpose() - p * m).norm() <= 1e-9, "pinv (M+ M)' = M+ M");
  }
  for (Index n : {2, 3}) {
    for (int t = 0; t < 50; ++t) {
      const Matrix s = symmetrize(random_matrix(n, n, rng));
      const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      const Matrix brute = es.eigenvectors() *
                           es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                           es.eigenvectors().transpose();
      const Matrix proj = psd_project(s);
      check((proj - brute).cwiseAbs().maxCoeff() <= 1e-12,
            "psd projection vs brute force");
      check(min_eig_sym(proj) >= -1e-10, "psd projection output PSD");
      check((psd_project(proj) - proj).norm() <= 1e-12,
            "psd projection idempotent");
    }
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RandomInstance r = random_system(3, 2, seed);
    const LqrSolution base = solve_care(r.system, r.cost);
    check(care_residual(r.system, r.cost, base.P) <=
              1e-8 * (1.0 + base.P.norm()),
          "CARE residual");
    for (double c : {0.5, 2.0, 10.0}) {
      const LqrSolution scaled =
          solve_care(r.system, {c * r.cost.Q, c * r.cost.R});
      check((scaled.K - base.K).cwiseAbs().maxCoeff() <= 1e-8,
            "gain invariance under (cQ, cR)");
    }
  }

  Outcome o;
  o.pass = failures == 0;
  o.detail = o.pass ? "commutation involution n=1..6, vec round trip, kron "
                      "identity, Moore-Penrose, PSD projection vs brute force, "
                      "CARE residual, gain scaling c in {0.5, 2, 10}"
                    : std::to_string(failures) + " failed checks, first: " +
                          first;
  return o;
}

}  // namespace

int main() {
  const RunConfig cfg;

  std::vector<SolvedInstance> runs;
  runs.push_back(solve_instance(nominal::system(), nominal::cost(),
                                nominal::initial_state(), cfg));
  for (int i = 0; i < kMonteCarloTrials; ++i) {
    const RandomInstance r =
        random_system(cfg.n, cfg.m, kMonteCarloSeed0 + static_cast<std::uint64_t>(i));
    try {
      runs.push_back(solve_instance(r.system, r.cost, r.x0, cfg));
    } catch (const Error& e) {
      std::fprintf(stderr, "trial %d: %s\n", i, e.what());
    }
  }

  RunConfig mc = cfg;
  mc.trials = kMonteCarloTrials;
  const MonteCarloSummary summary = run_montecarlo(mc, kMonteCarloSeed0);

  report("nominal reproduction", nominal_reproduction(runs.front().result));
  report("feasibility oracle", feasibility_oracle());
  report("BSUM descent", descent(runs));
  report("equivalence certificate", equivalence(runs));
  report("Monte Carlo stability", monte_carlo(summary));
  report("rate diagnostic", rate_diagnostic(runs.front()));
  report("unit property suites", unit_properties());

  std::printf("%d of 7 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
