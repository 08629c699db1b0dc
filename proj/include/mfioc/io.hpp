#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mfioc/pipeline.hpp"

namespace mfioc {

using Json = nlohmann::ordered_json;

/// Matrices travel as row-major nested arrays.
inline Json matrix_to_json(const Eigen::Ref<const Matrix>& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Eigen::Ref<const Vector>& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from_json(const Json& j, Index rows, Index cols,
                               const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw ArgumentError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ArgumentError(what + ": row " + std::to_string(i) + " must have " +
                          std::to_string(cols) + " entries");
    }
    for (Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ArgumentError(what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const Json& j, Index size,
                               const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != size) {
    throw ArgumentError(what + ": expected " + std::to_string(size) +
                        " entries");
  }
  Vector v(size);
  for (Index i = 0; i < size; ++i) {
    const Json& e = j[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw ArgumentError(what + ": non-numeric entry");
    v(i) = e.get<double>();
  }
  return v;
}

/// Finite doubles as numbers, everything else as null.
inline Json number_or_null(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

inline Json parse_json_text(const std::string& text, const std::string& name) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ArgumentError(name + ": invalid JSON (" + e.what() + ")");
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

/// System, cost and initial state bundled in one document.
struct SystemSpec {
  LtiSystem system;
  CostWeights cost;
  Vector x0;
};

inline Json system_to_json(const SystemSpec& s) {
  Json j;
  j["n"] = s.system.n();
  j["m"] = s.system.m();
  j["A"] = matrix_to_json(s.system.A);
  j["B"] = matrix_to_json(s.system.B);
  j["Q"] = matrix_to_json(s.cost.Q);
  j["R"] = matrix_to_json(s.cost.R);
  j["x0"] = vector_to_json(s.x0);
  return j;
}

inline SystemSpec system_from_json(const Json& j) {
  if (!j.is_object()) throw ArgumentError("system: expected a JSON object");
  for (const char* key : {"n", "m", "A", "B", "Q", "R", "x0"}) {
    if (!j.contains(key)) {
      throw ArgumentError(std::string("system: missing key '") + key + "'");
    }
  }
  if (!j["n"].is_number_integer() || !j["m"].is_number_integer()) {
    throw ArgumentError("system: n and m must be integers");
  }
  const Index n = j["n"].get<Index>();
  const Index m = j["m"].get<Index>();
  if (n < 1 || m < 1) throw ArgumentError("system: n and m must be >= 1");
  SystemSpec s;
  s.system.A = matrix_from_json(j["A"], n, n, "system.A");
  s.system.B = matrix_from_json(j["B"], n, m, "system.B");
  s.cost.Q = matrix_from_json(j["Q"], n, n, "system.Q");
  s.cost.R = matrix_from_json(j["R"], m, m, "system.R");
  s.x0 = vector_from_json(j["x0"], n, "system.x0");
  return s;
}

inline const char* to_string(DerivativeMethod d) {
  return d == DerivativeMethod::kFiniteDifference ? "finite-difference"
                                                  : "oracle";
}

inline DerivativeMethod derivative_method_from_string(const std::string& s) {
  if (s == "finite-difference") return DerivativeMethod::kFiniteDifference;
  if (s == "oracle") return DerivativeMethod::kClosedFormOracle;
  throw ArgumentError("unknown derivative mode '" + s + "'");
}

inline SignConvention sign_from_string(const std::string& s) {
  if (s == "standard") return SignConvention::kStandard;
  if (s == "paper") return SignConvention::kPaper;
  throw ArgumentError("unknown sign convention '" + s + "'");
}

inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["columns"] = c.columns;
  j["epsilon"] = c.epsilon;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["sign"] = to_string(c.sign);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["n"] = c.n;
  j["m"] = c.m;
  j["derivative"] = to_string(c.derivative);
  j["fd_accuracy"] = c.fd_accuracy;
  j["regularization"] = c.regularization;
  j["enforce_symmetry"] = c.enforce_symmetry;
  Json th;
  th["omega_relative"] = c.thresholds.omega_relative;
  th["cone_slack"] = c.thresholds.cone_slack;
  th["gain_error"] = c.thresholds.gain_error;
  th["derivative_relative"] = c.thresholds.derivative_relative;
  th["trajectory_mse"] = c.thresholds.trajectory_mse;
  j["thresholds"] = th;
  return j;
}

namespace detail {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ArgumentError(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const Json& j, RunConfig c = {}) {
  if (!j.is_object()) throw ArgumentError("config: expected a JSON object");
  static const char* const known[] = {
      "horizon", "dt",  "columns", "epsilon",    "tol",         "max_iter",
      "sign",    "seed", "trials", "n",          "m",           "derivative",
      "fd_accuracy", "regularization", "enforce_symmetry", "thresholds"};
  for (const auto& item : j.items()) {
    if (std::find(std::begin(known), std::end(known), item.key()) ==
        std::end(known)) {
      throw ArgumentError("config: unknown key '" + item.key() + "'");
    }
  }
  detail::read_field(j, "horizon", c.horizon);
  detail::read_field(j, "dt", c.dt);
  detail::read_field(j, "columns", c.columns);
  detail::read_field(j, "epsilon", c.epsilon);
  detail::read_field(j, "tol", c.tol);
  detail::read_field(j, "max_iter", c.max_iter);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "trials", c.trials);
  detail::read_field(j, "n", c.n);
  detail::read_field(j, "m", c.m);
  detail::read_field(j, "fd_accuracy", c.fd_accuracy);
  detail::read_field(j, "regularization", c.regularization);
  detail::read_field(j, "enforce_symmetry", c.enforce_symmetry);
  if (j.contains("sign")) {
    std::string s;
    detail::read_field(j, "sign", s);
    c.sign = sign_from_string(s);
  }
  if (j.contains("derivative")) {
    std::string s;
    detail::read_field(j, "derivative", s);
    c.derivative = derivative_method_from_string(s);
  }
  if (j.contains("thresholds")) {
    const Json& th = j["thresholds"];
    if (!th.is_object()) throw ArgumentError("config: thresholds must be an object");
    detail::read_field(th, "omega_relative", c.thresholds.omega_relative);
    detail::read_field(th, "cone_slack", c.thresholds.cone_slack);
    detail::read_field(th, "gain_error", c.thresholds.gain_error);
    detail::read_field(th, "derivative_relative",
                       c.thresholds.derivative_relative);
    detail::read_field(th, "trajectory_mse", c.thresholds.trajectory_mse);
  }
  c.validate();
  return c;
}

inline Json model_to_json(const RecoveredModel& m) {
  Json j;
  j["A_hat"] = matrix_to_json(m.A_hat);
  j["B_hat"] = matrix_to_json(m.B_hat);
  j["Q_hat"] = matrix_to_json(m.Q_hat);
  j["R_hat"] = matrix_to_json(m.R_hat);
  j["P_hat"] = matrix_to_json(m.P_hat);
  j["K_hat"] = matrix_to_json(m.K_hat);
  return j;
}

inline RecoveredModel model_from_json(const Json& j) {
  for (const char* key : {"A_hat", "B_hat", "Q_hat", "R_hat", "P_hat"}) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
      throw ArgumentError(std::string("model: missing '") + key + "'");
    }
  }
  const Index n = static_cast<Index>(j["A_hat"].size());
  const Index m = static_cast<Index>(j["R_hat"].size());
  RecoveredModel model;
  model.A_hat = matrix_from_json(j["A_hat"], n, n, "model.A_hat");
  model.B_hat = matrix_from_json(j["B_hat"], n, m, "model.B_hat");
  model.Q_hat = matrix_from_json(j["Q_hat"], n, n, "model.Q_hat");
  model.R_hat = matrix_from_json(j["R_hat"], m, m, "model.R_hat");
  model.P_hat = matrix_from_json(j["P_hat"], n, n, "model.P_hat");
  model.K_hat = model.R_hat.ldlt().solve(model.B_hat.transpose() * model.P_hat);
  return model;
}

inline Json verification_to_json(const Verification& v) {
  Json j;
  j["omega_residual"] = number_or_null(v.omega_residual);
  j["cone_margins"] = {{"q", v.cones.q}, {"p", v.cones.p}, {"r", v.cones.r}};
  j["min_eig_q"] = v.min_eig_q;
  j["min_eig_p"] = v.min_eig_p;
  j["min_eig_r"] = v.min_eig_r;
  j["gain_error_fro"] = number_or_null(v.gain_error_fro);
  j["are_residual"] = number_or_null(v.are.absolute);
  j["are_residual_relative"] = number_or_null(v.are.relative);
  Json d = Json::array();
  for (double r : v.derivative.relative) d.push_back(number_or_null(r));
  j["derivative_match"] = d;
  j["derivative_match_max"] = number_or_null(v.derivative.max_relative);
  j["traj_mse"] = number_or_null(v.traj_mse);
  j["stable"] = v.stable;
  j["checks"] = {{"primal", v.primal_ok},
                 {"cone", v.cone_ok},
                 {"gain", v.gain_ok},
                 {"derivative", v.derivative_ok},
                 {"mse", v.mse_ok}};
  j["passed"] = v.passed();
  return j;
}

inline Json report_to_json(const PipelineResult& r, const RunConfig& cfg) {
  Json j;
  j["status"] = to_string(r.status());
  j["passed"] = r.passed();
  j["iterations"] = r.solve.trace.cycles();
  j["config"] = config_to_json(cfg);
  j["identified_gain"] = matrix_to_json(r.gain.K);
  j["gain_fit_residual"] = r.gain.residual;
  if (r.true_gain) j["true_gain"] = matrix_to_json(*r.true_gain);
  Json idx = Json::array();
  for (Index i : r.data.sample_indices) idx.push_back(i);
  j["sample_indices"] = idx;
  j["data_consistency"] = r.data.consistency_residual();
  j["warnings"] = r.data.warnings;
  j["rho"] = r.problem.rho;
  j["rate"] = {{"sup_k_gap", number_or_null(r.solve.trace.rate.sup_k_gap)},
               {"loglog_slope",
                number_or_null(r.solve.trace.rate.loglog_slope)},
               {"points", r.solve.trace.rate.points}};
  if (r.model) j["model"] = model_to_json(*r.model);
  if (!r.recovery_error.empty()) j["recovery_error"] = r.recovery_error;
  if (r.verification) j["verification"] = verification_to_json(*r.verification);
  j["timing_ms"] = {{"identify", r.timings.identify_ms},
                    {"derivatives", r.timings.derivatives_ms},
                    {"assembly", r.timings.assembly_ms},
                    {"solve", r.timings.solve_ms},
                    {"verify", r.timings.verify_ms},
                    {"total", r.timings.total_ms}};
  return j;
}

inline Json error_to_json(const Error& e) {
  Json j;
  j["status"] = "error";
  j["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
  return j;
}

inline std::string montecarlo_csv_header() {
  return "trial,seed,status,iterations,gain_error,mse,omega_residual,passed";
}

/// Non-finite values are written as "inf"/"nan".
inline void write_montecarlo_csv(std::ostream& out,
                                 const MonteCarloSummary& s) {
  out << montecarlo_csv_header() << '\n';
  for (const TrialRecord& r : s.trials) {
    out << r.trial << ',' << r.seed << ',' << r.status << ',' << r.iterations
        << ',' << detail::format_double(r.gain_error) << ','
        << detail::format_double(r.mse) << ','
        << detail::format_double(r.omega_residual) << ','
        << (r.passed ? 1 : 0) << '\n';
  }
}

inline void write_montecarlo_csv(const std::string& path,
                                 const MonteCarloSummary& s) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  write_montecarlo_csv(out, s);
}

inline MonteCarloSummary read_montecarlo_csv(std::istream& in,
                                             const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || line != montecarlo_csv_header()) {
    throw ArgumentError(name + ": unexpected Monte Carlo CSV header");
  }
  MonteCarloSummary s;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) {
      throw ArgumentError(name + ": row " + std::to_string(row) +
                          " has " + std::to_string(cells.size()) + " cells");
    }
    TrialRecord r;
    try {
      r.trial = std::stoi(cells[0]);
      r.seed = std::stoull(cells[1]);
      r.status = cells[2];
      r.iterations = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw ArgumentError(name + ": bad integer in row " + std::to_string(row));
    }
    r.gain_error = detail::parse_double(cells[4], name);
    r.mse = detail::parse_double(cells[5], name);
    r.omega_residual = detail::parse_double(cells[6], name);
    r.passed = cells[7] == "1";
    s.trials.push_back(std::move(r));
  }
  summarize(s);
  return s;
}

inline Json montecarlo_summary_to_json(const MonteCarloSummary& s) {
  Json j;
  j["trials"] = s.trials.size();
  j["converged"] = s.converged;
  j["failures"] = s.failures;
  j["median_mse"] = number_or_null(s.median_mse);
  j["mean_mse"] = number_or_null(s.mean_mse);
  j["max_mse"] = number_or_null(s.max_mse);
  j["std_mse"] = number_or_null(s.std_mse);
  return j;
}

}  // namespace mfioc
