#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfioc/linalg.hpp"
#include "mfioc/trajectory.hpp"

namespace mfioc {

inline constexpr double kExcitationRtol = 1e-10;

struct GainEstimate {
  Matrix K;         // m x n, u = -K x
  double residual;  // ||U + K X||_F over all samples
};

/// Least-squares feedback gain: K = -(U X^T)(X X^T)^-1.
inline GainEstimate identify_gain(const Trajectory& traj) {
  traj.validate();
  const Matrix& x = traj.states;
  const Matrix& u = traj.inputs;
  const Matrix gram = x * x.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  const double bottom = es.eigenvalues().minCoeff();
  if (!(top > 0.0) || bottom <= kExcitationRtol * top) {
    throw InsufficientExcitation(
        "identify_gain: state samples do not span R^" +
        std::to_string(x.rows()) + " (" + std::to_string(traj.samples()) +
        " samples)");
  }
  GainEstimate est;
  // Least squares X^T K^T = -U^T by QR, avoiding the squared conditioning
  // of the normal equations.
  est.K = -x.transpose().colPivHouseholderQr().solve(u.transpose()).transpose();
  est.residual = (u + est.K * x).norm();
  return est;
}

enum class DerivativeMethod { kFiniteDifference, kClosedFormOracle };

struct DerivativeOptions {
  DerivativeMethod method = DerivativeMethod::kFiniteDifference;
  /// Formal accuracy order of the finite-difference stencils (even, >= 2).
  int accuracy = 10;
  /// Ground-truth closed-loop matrix, required by the oracle method only.
  std::optional<Matrix> closed_loop;
};

/// orders[i] holds i-th derivative samples (n x T); valid[j] is true when
/// every order is available at sample j.
struct DerivativeSamples {
  std::vector<Matrix> orders;
  std::vector<bool> valid;

  int max_order() const { return static_cast<int>(orders.size()) - 1; }
};

/// Fornberg's recursion: weights[k][d] is the weight of nodes[k] in the
/// d-th derivative approximation at z.
inline Matrix fd_weights(double z, std::span<const double> nodes,
                         int max_deriv) {
  const Index count = static_cast<Index>(nodes.size());
  Matrix c = Matrix::Zero(count, max_deriv + 1);
  double c1 = 1.0;
  double c4 = nodes[0] - z;
  c(0, 0) = 1.0;
  for (Index i = 1; i < count; ++i) {
    const int mn = static_cast<int>(std::min<Index>(i, max_deriv));
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[static_cast<std::size_t>(i)] - z;
    for (Index j = 0; j < i; ++j) {
      const double c3 = nodes[static_cast<std::size_t>(i)] -
                        nodes[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k > 0; --k) {
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        }
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k > 0; --k) {
        c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      }
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Half-width of the centered stencil for derivative `order`.
inline Index centered_half_width(int order, int accuracy) {
  return (order + 1) / 2 - 1 + accuracy / 2;
}

/// Minimum sample count for finite differences up to max_order.
inline Index min_samples_for(int max_order, int accuracy) {
  if (max_order <= 0) return 1;
  return std::max<Index>(2 * centered_half_width(max_order, accuracy) + 1,
                         max_order + accuracy);
}

inline DerivativeSamples finite_difference_derivatives(const Trajectory& traj,
                                                       int max_order,
                                                       int accuracy) {
  traj.validate();
  if (max_order < 0) throw ArgumentError("derivatives: negative order");
  if (accuracy < 2 || accuracy % 2 != 0) {
    throw ArgumentError("derivatives: accuracy must be an even integer >= 2");
  }
  const Index count = traj.samples();
  if (count < min_samples_for(max_order, accuracy)) {
    throw ArgumentError("derivatives: " + std::to_string(count) +
                        " samples are too few for order " +
                        std::to_string(max_order) + " at accuracy " +
                        std::to_string(accuracy));
  }
  const double dt = traj.dt();
  const Matrix& x = traj.states;
  const Index n = x.rows();

  DerivativeSamples out;
  out.orders.push_back(x);
  out.valid.assign(static_cast<std::size_t>(count), true);
  for (int order = 1; order <= max_order; ++order) {
    Matrix d = Matrix::Zero(n, count);
    const Index half = centered_half_width(order, accuracy);
    std::vector<double> nodes;
    for (Index k = -half; k <= half; ++k) nodes.push_back(k * dt);
    const Vector w = fd_weights(0.0, nodes, order).col(order);
    for (Index j = half; j + half < count; ++j) {
      d.col(j) = x.middleCols(j - half, 2 * half + 1) * w;
    }
    // One-sided stencil at t = 0 so the initial state keeps its derivatives.
    const Index forward_points = order + accuracy;
    std::vector<double> fwd;
    for (Index k = 0; k < forward_points; ++k) fwd.push_back(k * dt);
    const Vector w0 = fd_weights(0.0, fwd, order).col(order);
    d.col(0) = x.leftCols(forward_points) * w0;

    for (Index j = 1; j < count; ++j) {
      if (j < half || j + half >= count) {
        out.valid[static_cast<std::size_t>(j)] = false;
      }
    }
    out.orders.push_back(std::move(d));
  }
  return out;
}

inline DerivativeSamples oracle_derivatives(const Trajectory& traj,
                                            const Eigen::Ref<const Matrix>& ak,
                                            int max_order) {
  traj.validate();
  if (ak.rows() != traj.state_dim() || ak.cols() != traj.state_dim()) {
    throw ArgumentError("oracle derivatives: closed loop must be n x n");
  }
  DerivativeSamples out;
  out.orders.push_back(traj.states);
  for (int order = 1; order <= max_order; ++order) {
    out.orders.push_back(ak * out.orders.back());
  }
  out.valid.assign(static_cast<std::size_t>(traj.samples()), true);
  return out;
}

inline DerivativeSamples estimate_derivatives(const Trajectory& traj,
                                              int max_order,
                                              const DerivativeOptions& opts) {
  if (opts.method == DerivativeMethod::kClosedFormOracle) {
    if (!opts.closed_loop) {
      throw ArgumentError("oracle derivatives need the true closed loop");
    }
    return oracle_derivatives(traj, *opts.closed_loop, max_order);
  }
  return finite_difference_derivatives(traj, max_order, opts.accuracy);
}

struct DataMatrices {
  std::vector<Matrix> lambda_blocks;  // Lambda_0 .. Lambda_n, each n x N
  Matrix lambda_bar_1;                // [Lambda_0 ... Lambda_{n-1}]
  Matrix lambda_bar_2;                // [Lambda_1 ... Lambda_n]
  std::vector<Index> sample_indices;
  std::vector<std::string> warnings;

  Index columns() const {
    return static_cast<Index>(sample_indices.size());
  }

  /// Relative misfit of the best linear map Lambda_bar_1 -> Lambda_bar_2.
  double consistency_residual() const {
    const Matrix fit = lambda_bar_2 * pinv(lambda_bar_1);
    const double scale = std::max(lambda_bar_2.norm(), 1e-300);
    return (lambda_bar_2 - fit * lambda_bar_1).norm() / scale;
  }
};

/// Sample 0 followed by N-1 indices spread evenly across the valid interior.
inline std::vector<Index> default_sample_indices(
    const DerivativeSamples& derivs, Index columns) {
  if (columns < 1) throw ArgumentError("data matrices: N must be >= 1");
  std::vector<Index> interior;
  for (std::size_t j = 1; j < derivs.valid.size(); ++j) {
    if (derivs.valid[j]) interior.push_back(static_cast<Index>(j));
  }
  std::vector<Index> picks{0};
  const Index extra = columns - 1;
  if (extra == 0 || interior.empty()) return picks;
  const Index last = static_cast<Index>(interior.size()) - 1;
  for (Index k = 0; k < extra; ++k) {
    const double frac = extra == 1 ? 0.5 : static_cast<double>(k) /
                                                 static_cast<double>(extra - 1);
    const Index pos = static_cast<Index>(std::lround(frac * last));
    picks.push_back(interior[static_cast<std::size_t>(pos)]);
  }
  return picks;
}

inline DataMatrices build_data_matrices(const DerivativeSamples& derivs,
                                        std::vector<Index> indices) {
  if (derivs.orders.size() < 2) {
    throw ArgumentError("data matrices: need derivative orders 0..n");
  }
  const Index n = derivs.orders[0].rows();
  if (derivs.max_order() != n) {
    throw ArgumentError("data matrices: need derivative orders 0.." +
                        std::to_string(n) + ", got 0.." +
                        std::to_string(derivs.max_order()));
  }
  DataMatrices dm;
  std::size_t requested = indices.size();
  if (std::find(indices.begin(), indices.end(), Index{0}) == indices.end()) {
    dm.warnings.push_back("sample 0 was missing and has been prepended");
    ++requested;
  }
  // Sample 0 always leads so Lambda_0's first column is x(0).
  std::vector<Index> unique{0};
  for (Index idx : indices) {
    if (std::find(unique.begin(), unique.end(), idx) == unique.end()) {
      unique.push_back(idx);
    }
  }
  if (unique.size() < requested) {
    dm.warnings.push_back("duplicate sample indices removed; N reduced from " +
                          std::to_string(requested) + " to " +
                          std::to_string(unique.size()));
  }
  const Index count = derivs.orders[0].cols();
  for (Index idx : unique) {
    if (idx < 0 || idx >= count || !derivs.valid[static_cast<std::size_t>(idx)]) {
      throw ArgumentError("data matrices: sample " + std::to_string(idx) +
                          " lacks derivatives of every order");
    }
  }
  dm.sample_indices = unique;
  const Index cols = static_cast<Index>(unique.size());
  for (const Matrix& order : derivs.orders) {
    Matrix block(n, cols);
    for (Index c = 0; c < cols; ++c) {
      block.col(c) = order.col(unique[static_cast<std::size_t>(c)]);
    }
    dm.lambda_blocks.push_back(std::move(block));
  }
  dm.lambda_bar_1.resize(n, n * cols);
  dm.lambda_bar_2.resize(n, n * cols);
  for (Index i = 0; i < n; ++i) {
    dm.lambda_bar_1.middleCols(i * cols, cols) =
        dm.lambda_blocks[static_cast<std::size_t>(i)];
    dm.lambda_bar_2.middleCols(i * cols, cols) =
        dm.lambda_blocks[static_cast<std::size_t>(i + 1)];
  }
  if (numerical_rank(dm.lambda_bar_1, kExcitationRtol) < n) {
    throw InsufficientExcitation(
        "data matrices: derivative samples do not span R^" +
        std::to_string(n));
  }
  return dm;
}

inline DataMatrices build_data_matrices(const DerivativeSamples& derivs,
                                        Index columns) {
  return build_data_matrices(derivs, default_sample_indices(derivs, columns));
}

/// Closed-loop matrix from l >= n trajectories sampled at a common instant:
/// A_K = Xdot X^+.
inline Matrix multi_traj_closed_loop(std::span<const Trajectory> trajs,
                                     const DerivativeOptions& opts,
                                     Index sample = 0) {
  if (trajs.empty()) throw ArgumentError("multi-trajectory: no trajectories");
  const Index n = trajs[0].state_dim();
  const Index l = static_cast<Index>(trajs.size());
  if (l < n) {
    throw InsufficientExcitation("multi-trajectory: need at least n = " +
                                 std::to_string(n) + " trajectories");
  }
  Matrix x(n, l);
  Matrix xdot(n, l);
  for (Index k = 0; k < l; ++k) {
    const Trajectory& t = trajs[static_cast<std::size_t>(k)];
    if (t.state_dim() != n) {
      throw ArgumentError("multi-trajectory: inconsistent state dimension");
    }
    const DerivativeSamples d = estimate_derivatives(t, 1, opts);
    if (sample < 0 || sample >= t.samples() ||
        !d.valid[static_cast<std::size_t>(sample)]) {
      throw ArgumentError("multi-trajectory: sample " +
                          std::to_string(sample) + " has no derivative");
    }
    x.col(k) = d.orders[0].col(sample);
    xdot.col(k) = d.orders[1].col(sample);
  }
  if (numerical_rank(x, kExcitationRtol) < n) {
    throw InsufficientExcitation(
        "multi-trajectory: stacked states are rank deficient");
  }
  return xdot * pinv(x);
}

}  // namespace mfioc
