#pragma once

// Dense matrix helpers shared by every stage of the pipeline. Vectorization is
// column-major throughout, so vec(A X B) = (B^T kron A) vec(X) holds as is.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

#include "mfioc/errors.hpp"

namespace mfioc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultPinvRtol = 1e-12;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline Vector vectorize(const Eigen::Ref<const Matrix>& m) {
  Vector v(m.size());
  Eigen::Map<Matrix>(v.data(), m.rows(), m.cols()) = m;
  return v;
}

inline Matrix unvectorize(const Eigen::Ref<const Vector>& v, Index rows,
                          Index cols) {
  if (rows < 1 || cols < 1 || v.size() != rows * cols) {
    throw ArgumentError("unvectorize: length " + std::to_string(v.size()) +
                        " does not match " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Permutation Y with Y * vec(Z) = vec(Z^T) for n x n Z.
inline Matrix commutation_matrix(Index n) {
  if (n < 1) throw ArgumentError("commutation_matrix: n must be >= 1");
  Matrix y = Matrix::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      // vec(Z^T)[i + j*n] = Z^T(i,j) = Z(j,i) = vec(Z)[j + i*n]
      y(i + j * n, j + i * n) = 1.0;
    }
  }
  return y;
}

inline Matrix kron(const Eigen::Ref<const Matrix>& a,
                   const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Matrix symmetrize(const Eigen::Ref<const Matrix>& s) {
  return 0.5 * (s + s.transpose());
}

namespace detail {

inline void require_square(const Eigen::Ref<const Matrix>& s,
                           const char* who) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw ArgumentError(std::string(who) + ": matrix must be square, got " +
                        std::to_string(s.rows()) + "x" +
                        std::to_string(s.cols()));
  }
}

inline Eigen::SelfAdjointEigenSolver<Matrix> sym_eig(
    const Eigen::Ref<const Matrix>& s, const char* who,
    int options = Eigen::ComputeEigenvectors) {
  require_square(s, who);
  if (!s.allFinite()) {
    throw NumericalBreakdown(std::string(who) + ": non-finite input");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), options);
  if (es.info() != Eigen::Success) {
    throw NumericalBreakdown(std::string(who) +
                             ": symmetric eigendecomposition failed");
  }
  return es;
}

}  // namespace detail

/// Frobenius-nearest symmetric PSD matrix to (S + S^T)/2.
inline Matrix psd_project(const Eigen::Ref<const Matrix>& s) {
  const auto es = detail::sym_eig(s, "psd_project");
  const Vector clamped = es.eigenvalues().cwiseMax(0.0);
  Matrix out = es.eigenvectors() * clamped.asDiagonal() *
               es.eigenvectors().transpose();
  return symmetrize(out);
}

inline double max_eig_sym(const Eigen::Ref<const Matrix>& s) {
  return detail::sym_eig(s, "max_eig_sym", Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

inline double min_eig_sym(const Eigen::Ref<const Matrix>& s) {
  return detail::sym_eig(s, "min_eig_sym", Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

/// Moore-Penrose pseudoinverse; singular values below rtol * sigma_max are
/// treated as zero.
inline Matrix pinv(const Eigen::Ref<const Matrix>& m,
                   double rtol = kDefaultPinvRtol) {
  if (!(rtol > 0.0)) throw ArgumentError("pinv: rtol must be positive");
  if (!m.allFinite()) throw NumericalBreakdown("pinv: non-finite input");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalBreakdown("pinv: SVD did not converge");
  }
  const Vector& sv = svd.singularValues();
  const double cutoff = rtol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Numerical rank from singular values with a relative threshold.
inline Index numerical_rank(const Eigen::Ref<const Matrix>& m, double rtol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rtol * sv(0)) ++r;
  }
  return r;
}

inline Matrix expm(const Eigen::Ref<const Matrix>& m) {
  detail::require_square(m, "expm");
  if (!m.allFinite()) throw NumericalBreakdown("expm: non-finite input");
  Matrix out = Matrix(m).exp();
  if (!out.allFinite()) {
    throw NumericalBreakdown("expm: result overflows double precision");
  }
  return out;
}

}  // namespace mfioc
