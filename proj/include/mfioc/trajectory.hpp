#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mfioc/linalg.hpp"

namespace mfioc {

/// Sampled state/input path on a uniform time grid. Column j of `states` and
/// `inputs` belongs to `times(j)`.
struct Trajectory {
  Vector times;
  Matrix states;  // n x T
  Matrix inputs;  // m x T

  Index state_dim() const { return states.rows(); }
  Index input_dim() const { return inputs.rows(); }
  Index samples() const { return times.size(); }

  double dt() const {
    return samples() >= 2 ? times(1) - times(0) : 0.0;
  }

  void validate() const {
    const Index count = samples();
    if (count < 1) throw ArgumentError("trajectory: no samples");
    if (states.cols() != count || inputs.cols() != count) {
      throw ArgumentError("trajectory: column counts do not match the grid");
    }
    if (!times.allFinite() || !states.allFinite() || !inputs.allFinite()) {
      throw ArgumentError("trajectory: non-finite entries");
    }
    if (count < 2) return;
    const double step = dt();
    if (!(step > 0.0)) {
      throw ArgumentError("trajectory: times must be strictly increasing");
    }
    const double scale = std::max(1.0, std::abs(times(count - 1)));
    for (Index j = 1; j < count; ++j) {
      const double expected = times(0) + static_cast<double>(j) * step;
      if (std::abs(times(j) - expected) > 1e-9 * scale) {
        throw ArgumentError("trajectory: grid is not uniform at sample " +
                            std::to_string(j));
      }
    }
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ArgumentError(where + ": cannot parse '" + s + "' as a number");
  }
  if (used != s.size()) {
    throw ArgumentError(where + ": trailing characters in '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline std::string trajectory_csv_header(Index n, Index m) {
  std::string h = "t";
  for (Index i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  for (Index i = 1; i <= m; ++i) h += ",u" + std::to_string(i);
  return h;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << trajectory_csv_header(traj.state_dim(), traj.input_dim()) << '\n';
  for (Index j = 0; j < traj.samples(); ++j) {
    out << detail::format_double(traj.times(j));
    for (Index i = 0; i < traj.state_dim(); ++i) {
      out << ',' << detail::format_double(traj.states(i, j));
    }
    for (Index i = 0; i < traj.input_dim(); ++i) {
      out << ',' << detail::format_double(traj.inputs(i, j));
    }
    out << '\n';
  }
}

inline void write_trajectory_csv(const std::string& path,
                                 const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj);
}

inline Trajectory read_trajectory_csv(std::istream& in,
                                      const std::string& name = "csv") {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError(name + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw ArgumentError(name + ": header must start with 't'");
  }
  Index n = 0, m = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string& h = header[k];
    const bool is_x = !h.empty() && h[0] == 'x';
    const bool is_u = !h.empty() && h[0] == 'u';
    if (is_x && m == 0 && h == "x" + std::to_string(n + 1)) {
      ++n;
    } else if (is_u && h == "u" + std::to_string(m + 1)) {
      ++m;
    } else {
      throw ArgumentError(name + ": unexpected column '" + h + "'");
    }
  }
  if (n == 0 || m == 0) {
    throw ArgumentError(name + ": header needs x1..xn and u1..um columns");
  }
  std::vector<std::vector<double>> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<Index>(cells.size()) != 1 + n + m) {
      throw ArgumentError(name + ": line " + std::to_string(line_no) +
                          " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(1 + n + m));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      row.push_back(
          detail::parse_double(c, name + ":" + std::to_string(line_no)));
    }
    rows.push_back(std::move(row));
  }
  Trajectory traj;
  const Index count = static_cast<Index>(rows.size());
  traj.times.resize(count);
  traj.states.resize(n, count);
  traj.inputs.resize(m, count);
  for (Index j = 0; j < count; ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    traj.times(j) = r[0];
    for (Index i = 0; i < n; ++i) traj.states(i, j) = r[1 + i];
    for (Index i = 0; i < m; ++i) traj.inputs(i, j) = r[1 + n + i];
  }
  traj.validate();
  return traj;
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  return read_trajectory_csv(in, path);
}

}  // namespace mfioc
