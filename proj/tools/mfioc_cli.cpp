#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mfioc/mfioc.hpp"

namespace fs = std::filesystem;
using namespace mfioc;

namespace {

enum ExitCode {
  kOk = 0,
  kIo = 1,
  kUsage = 2,
  kExcitation = 3,
  kNumerical = 4,
  kAcceptanceMiss = 5,
  kGeneration = 6,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return kIo;
    case ErrorKind::kInsufficientExcitation: return kExcitation;
    case ErrorKind::kInfeasibleModel:
    case ErrorKind::kNumericalBreakdown:
    case ErrorKind::kRecoveryFailure: return kNumerical;
    case ErrorKind::kGenerationFailure: return kGeneration;
  }
  return kNumerical;
}

struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string sign;
  bool quiet = false;
};

class Console {
 public:
  explicit Console(const bool& quiet) : quiet_(quiet) {}

  template <typename... Args>
  void print(const char* fmt, Args... args) const {
    if (quiet_) return;
    std::printf(fmt, args...);
    std::fflush(stdout);
  }

 private:
  const bool& quiet_;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    cfg = config_from_json(read_json_file(g.config_path));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.sign.empty()) cfg.sign = sign_from_string(g.sign);
  cfg.validate();
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

/// Writes the report, trace and trajectory artifacts of one pipeline run.
void write_run_artifacts(const Globals& g, const PipelineResult& res,
                         const RunConfig& cfg, bool dump_problem) {
  write_json_file(out_path(g, "report.json"), report_to_json(res, cfg));
  write_trace_csv(out_path(g, "trace.csv"), res.solve.trace);
  write_trajectory_csv(out_path(g, "expert.csv"), res.expert);
  if (res.model) {
    const TrajectoryFit fit = trajectory_mse(*res.model, res.expert);
    if (fit.stable) {
      write_trajectory_csv(out_path(g, "recon.csv"), fit.reconstructed);
    }
  }
  if (dump_problem) {
    fs::create_directories(g.out_dir);
    dump_problem_csv(g.out_dir, res.problem);
  }
}

void print_run_summary(const Console& con, const PipelineResult& res) {
  con.print("status      %s\n", to_string(res.status()));
  con.print("iterations  %d\n", res.solve.trace.cycles());
  if (res.verification) {
    const Verification& v = *res.verification;
    con.print("omega_res   %.3e\n", v.omega_residual);
    con.print("gain_error  %.3e\n", v.gain_error_fro);
    con.print("deriv_match %.3e\n", v.derivative.max_relative);
    con.print("traj_mse    %.3e\n", v.traj_mse);
    con.print("certificate %s\n", v.passed() ? "pass" : "fail");
  } else if (!res.recovery_error.empty()) {
    con.print("recovery    %s\n", res.recovery_error.c_str());
  }
}

int cmd_gen(const Globals& g, const Console& con, int n, int m) {
  const RunConfig cfg = load_config(g);
  const RandomInstance inst = random_system(n, m, cfg.seed);
  const std::string path = out_path(g, "system.json");
  write_json_file(path, system_to_json({inst.system, inst.cost, inst.x0}));
  con.print("wrote %s\n", path.c_str());
  return kOk;
}

int cmd_simulate(const Globals& g, const Console& con,
                 const std::string& system_path) {
  const RunConfig cfg = load_config(g);
  const SystemSpec spec = system_from_json(read_json_file(system_path));
  const LqrSolution lqr = solve_care(spec.system, spec.cost);
  const Trajectory traj = simulate_closed_loop(spec.system, lqr.K, spec.x0,
                                               cfg.horizon, cfg.dt);
  const std::string path = out_path(g, "expert.csv");
  write_trajectory_csv(path, traj);
  con.print("wrote %s (%ld samples)\n", path.c_str(),
            static_cast<long>(traj.samples()));
  return kOk;
}

int cmd_solve(const Globals& g, const Console& con,
              const std::string& system_path, const std::string& traj_path,
              bool dump_problem) {
  const RunConfig cfg = load_config(g);
  PipelineResult res;
  try {
    if (!traj_path.empty()) {
      res = run_from_trajectory(read_trajectory_csv(traj_path), cfg);
    } else {
      const SystemSpec spec = system_from_json(read_json_file(system_path));
      res = run_pipeline(spec.system, spec.cost, spec.x0, cfg);
    }
  } catch (const Error& e) {
    write_json_file(out_path(g, "report.json"), error_to_json(e));
    throw;
  }
  write_run_artifacts(g, res, cfg, dump_problem);
  print_run_summary(con, res);
  if (res.passed()) return kOk;
  return res.model ? kAcceptanceMiss : kNumerical;
}

int cmd_verify(const Globals& g, const Console& con,
               const std::string& report_path, const std::string& traj_path) {
  const RunConfig cfg = load_config(g);
  const Json report = read_json_file(report_path);
  if (!report.contains("model")) {
    throw ArgumentError(report_path + ": no recovered model to verify");
  }
  const RecoveredModel model = model_from_json(report["model"]);
  const Trajectory expert = read_trajectory_csv(traj_path);
  const GainEstimate gain = identify_gain(expert);
  DerivativeOptions dopts;
  dopts.accuracy = cfg.fd_accuracy;
  const DerivativeSamples derivs = estimate_derivatives(
      expert, static_cast<int>(expert.state_dim()), dopts);
  const DataMatrices dm = build_data_matrices(derivs, cfg.columns);
  Verification v = verify_model(model, gain.K, expert, data_powers(dm),
                                cfg.epsilon, cfg.thresholds);
  // No decision vector is available here, so the primal check is skipped.
  v.primal_ok = true;
  Json out = verification_to_json(v);
  out["checks"]["primal"] = nullptr;
  write_json_file(out_path(g, "verification.json"), out);
  con.print("gain_error  %.3e\n", v.gain_error_fro);
  con.print("deriv_match %.3e\n", v.derivative.max_relative);
  con.print("traj_mse    %.3e\n", v.traj_mse);
  con.print("certificate %s\n", v.passed() ? "pass" : "fail");
  return v.passed() ? kOk : kAcceptanceMiss;
}

int cmd_repro_paper(const Globals& g, const Console& con) {
  RunConfig cfg = load_config(g);
  cfg.horizon = nominal::kHorizon;
  cfg.dt = nominal::kDt;
  const SystemSpec spec{nominal::system(), nominal::cost(),
                        nominal::initial_state()};
  write_json_file(out_path(g, "system.json"), system_to_json(spec));
  const PipelineResult res = run_pipeline(spec.system, spec.cost, spec.x0, cfg);
  write_run_artifacts(g, res, cfg, false);

  const double gain_dev =
      (res.gain.K - nominal::printed_gain()).cwiseAbs().maxCoeff();
  const int iters = res.solve.trace.cycles();
  const double gain_err = res.verification
                              ? res.verification->gain_error_fro
                              : std::numeric_limits<double>::infinity();
  const double mse = res.verification ? res.verification->traj_mse
                                      : std::numeric_limits<double>::infinity();
  const double runtime_s = res.timings.total_ms / 1000.0;

  struct Row {
    const char* metric;
    double reported;
    double ours;
    double limit;
  };
  const Row rows[] = {
      {"iterations", nominal::kReportedIterations, static_cast<double>(iters),
       500.0},
      {"gain_error", nominal::kReportedGainError, gain_err, 1e-3},
      {"trajectory_mse", nominal::kReportedMse, mse, 1e-5},
      {"gain_vs_printed_max_abs", 0.0, gain_dev, 1e-3},
      {"runtime_s", nominal::kReportedRuntimeSec, runtime_s,
       std::numeric_limits<double>::infinity()},
  };
  {
    std::ofstream csv(out_path(g, "comparison.csv"));
    if (!csv) throw ArgumentError("cannot write comparison.csv");
    csv << "metric,reported,ours,limit,pass\n";
    for (const Row& r : rows) {
      csv << r.metric << ',' << detail::format_double(r.reported) << ','
          << detail::format_double(r.ours) << ','
          << detail::format_double(r.limit) << ','
          << (r.ours <= r.limit ? 1 : 0) << '\n';
    }
  }
  con.print("%-24s %12s %12s %10s\n", "metric", "reported", "ours", "pass");
  bool ok = res.status() == SolveStatus::kConverged;
  for (const Row& r : rows) {
    const bool pass = r.ours <= r.limit;
    ok = ok && pass;
    con.print("%-24s %12.4g %12.4g %10s\n", r.metric, r.reported, r.ours,
              pass ? "yes" : "no");
  }
  con.print("status %s\n", to_string(res.status()));
  return ok ? kOk : kAcceptanceMiss;
}

int cmd_montecarlo(const Globals& g, const Console& con, int trials, int n,
                   int m, unsigned workers) {
  RunConfig cfg = load_config(g);
  cfg.trials = trials;
  cfg.n = n;
  cfg.m = m;
  cfg.validate();
  const MonteCarloSummary s = run_montecarlo(cfg, cfg.seed, workers);
  write_montecarlo_csv(out_path(g, "montecarlo.csv"), s);
  Json summary = montecarlo_summary_to_json(s);
  summary["seed0"] = cfg.seed;
  summary["n"] = n;
  summary["m"] = m;
  write_json_file(out_path(g, "montecarlo_summary.json"), summary);
  con.print("trials %d  converged %d  failures %d\n",
            static_cast<int>(s.trials.size()), s.converged, s.failures);
  con.print("mse median %.3e  mean %.3e  max %.3e  std %.3e\n", s.median_mse,
            s.mean_mse, s.max_mse, s.std_mse);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-free inverse LQR: recover an equivalent (A, B, Q, R) "
               "from one optimal trajectory"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Run configuration JSON")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Random seed (seed0 for montecarlo)");
  app.add_option("--sign", g.sign, "Dual sign convention")
      ->check(CLI::IsMember({"standard", "paper"}));
  app.add_flag("--quiet", g.quiet, "Suppress console output");
  const Console con(g.quiet);

  int gen_n = 3;
  int gen_m = 2;
  auto* gen = app.add_subcommand("gen", "Generate a random benchmark system");
  gen->add_option("-n", gen_n, "State dimension")->check(CLI::PositiveNumber);
  gen->add_option("-m", gen_m, "Input dimension")->check(CLI::PositiveNumber);

  std::string system_path;
  auto* sim = app.add_subcommand("simulate", "Simulate the optimal expert");
  sim->add_option("system", system_path, "System JSON")
      ->required()
      ->check(CLI::ExistingFile);

  std::string traj_path;
  bool dump_problem = false;
  auto* slv = app.add_subcommand("solve", "Run the inverse pipeline");
  auto* sys_opt = slv->add_option("system", system_path, "System JSON")
                      ->check(CLI::ExistingFile);
  auto* traj_opt =
      slv->add_option("--trajectory", traj_path, "Expert trajectory CSV")
          ->check(CLI::ExistingFile);
  sys_opt->excludes(traj_opt);
  slv->add_flag("--dump-problem", dump_problem,
                "Write omega.csv, h_dual.csv and w_offset.csv");

  std::string report_path;
  auto* ver =
      app.add_subcommand("verify", "Check a recovered model against data");
  ver->add_option("report", report_path, "Report JSON with a model")
      ->required()
      ->check(CLI::ExistingFile);
  ver->add_option("trajectory", traj_path, "Expert trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);

  auto* repro = app.add_subcommand("repro-paper",
                                   "Run the nominal three-state experiment");

  int mc_trials = 100;
  int mc_n = 3;
  int mc_m = 2;
  unsigned mc_workers = 0;
  auto* mc = app.add_subcommand("montecarlo", "Batch of random instances");
  mc->add_option("--trials", mc_trials, "Number of trials")
      ->check(CLI::PositiveNumber);
  mc->add_option("-n", mc_n, "State dimension")->check(CLI::PositiveNumber);
  mc->add_option("-m", mc_m, "Input dimension")->check(CLI::PositiveNumber);
  mc->add_option("--workers", mc_workers, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(g, con, gen_n, gen_m);
    if (*sim) return cmd_simulate(g, con, system_path);
    if (*slv) {
      if (system_path.empty() && traj_path.empty()) {
        std::cerr << "solve: give a system JSON or --trajectory\n";
        return kUsage;
      }
      return cmd_solve(g, con, system_path, traj_path, dump_problem);
    }
    if (*ver) return cmd_verify(g, con, report_path, traj_path);
    if (*repro) return cmd_repro_paper(g, con);
    if (*mc) return cmd_montecarlo(g, con, mc_trials, mc_n, mc_m, mc_workers);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what()
              << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
