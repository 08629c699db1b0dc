#pragma once

#include "mfioc/lqr.hpp"

namespace mfioc::nominal {

/// The three-state, two-input benchmark used by `repro-paper`.
inline constexpr double kHorizon = 8.0;
inline constexpr double kDt = 0.1;

inline LtiSystem system() {
  LtiSystem sys;
  sys.A.resize(3, 3);
  sys.A << -0.650, -0.109, -0.066,
           -0.109, -0.995, -0.093,
           -0.066, -0.093, -0.733;
  sys.B.resize(3, 2);
  sys.B << 0.650, 0.343,
           -0.215, -0.319,
           0.778, -0.101;
  return sys;
}

inline CostWeights cost() {
  CostWeights c;
  c.Q.resize(3, 3);
  c.Q << 1.393, 0.120, 0.146,
         0.120, 3.559, -1.960,
         0.146, -1.960, 1.702;
  c.R.resize(2, 2);
  c.R << 3.761, -0.324,
         -0.324, 3.719;
  return c;
}

inline Vector initial_state() {
  Vector x0(3);
  x0 << -0.746, 1.231, 0.548;
  return x0;
}

/// Printed three-decimal optimal gain of the benchmark.
inline Matrix printed_gain() {
  Matrix k(2, 3);
  k << 0.161, -0.316, 0.285,
       0.098, -0.135, 0.083;
  return k;
}

/// Published reference figures for the comparison table.
inline constexpr int kReportedIterations = 19;
inline constexpr double kReportedGainError = 1.424e-4;
inline constexpr double kReportedMse = 8.67e-7;
inline constexpr double kReportedRuntimeSec = 0.3;
inline constexpr double kReportedMonteCarloMedianMse = 1.27e-5;

}  // namespace mfioc::nominal
