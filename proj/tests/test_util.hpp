#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <random>

#include "mfioc/linalg.hpp"

namespace mfioc::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Matrix random_symmetric(Index n, std::uint64_t seed) {
  return symmetrize(random_matrix(n, n, seed));
}

inline ::testing::AssertionResult near(const Eigen::Ref<const Matrix>& a,
                                       const Eigen::Ref<const Matrix>& b,
                                       double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return ::testing::AssertionFailure()
           << "shape " << a.rows() << "x" << a.cols() << " vs " << b.rows()
           << "x" << b.cols();
  }
  const double err = (a - b).cwiseAbs().maxCoeff();
  if (err <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << "max abs difference " << err << " exceeds " << tol << "\n"
         << a << "\nvs\n" << b;
}

}  // namespace mfioc::testing
