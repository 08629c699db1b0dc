#include <gtest/gtest.h>

#include <cmath>

#include "mfioc/linalg.hpp"
#include "test_util.hpp"

namespace mfioc {
namespace {

using testing::near;
using testing::random_matrix;
using testing::random_symmetric;

TEST(Vectorize, StacksColumns) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  Vector expected(4);
  expected << 1, 3, 2, 4;
  EXPECT_TRUE(near(vectorize(m), expected, 0.0));
}

TEST(Vectorize, ZeroAndScalar) {
  EXPECT_TRUE(near(vectorize(Matrix::Zero(2, 3)), Vector::Zero(6), 0.0));
  Matrix a(1, 1);
  a << 4.5;
  EXPECT_EQ(vectorize(a).size(), 1);
  EXPECT_EQ(vectorize(a)(0), 4.5);
}

TEST(Vectorize, RoundTripsEveryShape) {
  for (Index r = 1; r <= 4; ++r) {
    for (Index c = 1; c <= 4; ++c) {
      const Matrix m = random_matrix(r, c, 10 * r + c);
      EXPECT_TRUE(near(unvectorize(vectorize(m), r, c), m, 0.0));
    }
  }
}

TEST(Vectorize, UnvectorizeRejectsWrongLength) {
  EXPECT_THROW(unvectorize(Vector::Zero(5), 2, 3), ArgumentError);
}

TEST(Commutation, ScalarIsOne) {
  EXPECT_TRUE(near(commutation_matrix(1), Matrix::Identity(1, 1), 0.0));
}

TEST(Commutation, TransposesTwoByTwo) {
  Matrix z(2, 2);
  z << 1, 2, 3, 4;
  Vector expected(4);
  expected << 1, 2, 3, 4;
  EXPECT_TRUE(near(commutation_matrix(2) * vectorize(z), expected, 0.0));
}

TEST(Commutation, InvolutoryPermutationUpToSix) {
  for (Index n = 1; n <= 6; ++n) {
    const Matrix y = commutation_matrix(n);
    EXPECT_TRUE(near(y * y, Matrix::Identity(n * n, n * n), 0.0)) << n;
    for (Index i = 0; i < n * n; ++i) {
      EXPECT_EQ(y.row(i).sum(), 1.0);
      EXPECT_EQ(y.col(i).sum(), 1.0);
    }
    const Matrix z = random_matrix(n, n, 100 + n);
    EXPECT_TRUE(near(y * vectorize(z), vectorize(z.transpose()), 0.0));
  }
}

TEST(Kron, IdentityFactors) {
  Matrix five(1, 1);
  five << 5;
  EXPECT_TRUE(near(kron(Matrix::Identity(2, 2), five),
                   5.0 * Matrix::Identity(2, 2), 0.0));
  const Matrix m = random_matrix(2, 3, 1);
  Matrix expected = Matrix::Zero(4, 6);
  expected.topLeftCorner(2, 3) = m;
  expected.bottomRightCorner(2, 3) = m;
  EXPECT_TRUE(near(kron(Matrix::Identity(2, 2), m), expected, 0.0));
}

TEST(Kron, VectorizationIdentity) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index n = s < 10 ? 2 : 3;
    const Matrix a = random_matrix(n, n, 3 * s);
    const Matrix x = random_matrix(n, n, 3 * s + 1);
    const Matrix b = random_matrix(n, n, 3 * s + 2);
    EXPECT_TRUE(near(vectorize(a * x * b),
                     kron(b.transpose(), a) * vectorize(x), 1e-12));
  }
}

TEST(Kron, VectorizationIdentityRectangular) {
  const Matrix a = random_matrix(2, 3, 7);
  const Matrix x = random_matrix(3, 4, 8);
  const Matrix b = random_matrix(4, 2, 9);
  EXPECT_TRUE(near(vectorize(a * x * b),
                   kron(b.transpose(), a) * vectorize(x), 1e-12));
}

TEST(PsdProject, ClampsDiagonal) {
  Matrix s(2, 2);
  s << 3, 0, 0, -1;
  Matrix expected(2, 2);
  expected << 3, 0, 0, 0;
  EXPECT_TRUE(near(psd_project(s), expected, 1e-14));
}

TEST(PsdProject, OffDiagonalOracle) {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  EXPECT_TRUE(near(psd_project(s), Matrix::Constant(2, 2, 0.5), 1e-14));
}

TEST(PsdProject, FixedPointAndIdempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = random_matrix(3, 3, seed);
    const Matrix psd = m * m.transpose();
    EXPECT_TRUE(near(psd_project(psd), psd, 1e-12));
    const Matrix once = psd_project(random_symmetric(3, 50 + seed));
    EXPECT_TRUE(near(psd_project(once), once, 1e-12));
    EXPECT_GE(min_eig_sym(once), -1e-10);
  }
}

TEST(PsdProject, SymmetrizesFirst) {
  Matrix s(2, 2);
  s << 1, 2, 0, 1;
  EXPECT_TRUE(near(psd_project(s), psd_project(symmetrize(s)), 1e-15));
}

// Brute force: the nearest PSD matrix is attained at a point whose distance
// no random PSD competitor beats.
TEST(PsdProject, MatchesBruteForce) {
  for (Index n : {2, 3}) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const Matrix s = random_symmetric(n, 1000 * n + seed);
      const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      const Matrix brute =
          es.eigenvectors() *
          es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
      const Matrix proj = psd_project(s);
      EXPECT_TRUE(near(proj, brute, 1e-12));
      const double best = (s - proj).norm();
      for (std::uint64_t k = 0; k < 20; ++k) {
        const Matrix g = random_matrix(n, n, 77 * seed + k);
        const Matrix competitor = proj + 0.1 * g * g.transpose();
        EXPECT_LE(best, (s - competitor).norm() + 1e-12);
      }
    }
  }
}

TEST(Pinv, IdentityAndDiagonal) {
  EXPECT_TRUE(near(pinv(Matrix::Identity(3, 3)), Matrix::Identity(3, 3),
                   1e-15));
  Matrix d(2, 2);
  d << 2, 0, 0, 0;
  Matrix expected(2, 2);
  expected << 0.5, 0, 0, 0;
  EXPECT_TRUE(near(pinv(d), expected, 1e-15));
}

TEST(Pinv, LeftInverseOfTallMatrix) {
  const Matrix m = random_matrix(5, 3, 11);
  EXPECT_TRUE(near(pinv(m) * m, Matrix::Identity(3, 3), 1e-10));
}

TEST(Pinv, MoorePenroseIdentities) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    // Rank-deficient products exercise the cutoff.
    const Matrix m =
        random_matrix(6, 2, seed) * random_matrix(2, 4, seed + 100);
    const Matrix p = pinv(m);
    const double scale = m.norm();
    EXPECT_LE((m * p * m - m).norm(), 1e-9 * scale);
    EXPECT_LE((p * m * p - p).norm(), 1e-9 * p.norm());
    EXPECT_LE(((m * p).transpose() - m * p).norm(), 1e-9);
    EXPECT_LE(((p * m).transpose() - p * m).norm(), 1e-9);
    EXPECT_EQ(numerical_rank(m, 1e-10), 2);
  }
}

TEST(ExtremeEigs, DiagonalAndZero) {
  const Matrix d = Eigen::Vector3d(1, 5, 2).asDiagonal();
  EXPECT_DOUBLE_EQ(max_eig_sym(d), 5.0);
  EXPECT_DOUBLE_EQ(min_eig_sym(d), 1.0);
  EXPECT_EQ(max_eig_sym(Matrix::Zero(3, 3)), 0.0);
  EXPECT_EQ(min_eig_sym(Matrix::Zero(3, 3)), 0.0);
}

TEST(ExtremeEigs, RejectNonSquare) {
  EXPECT_THROW(max_eig_sym(Matrix::Zero(2, 3)), ArgumentError);
}

TEST(Expm, ZeroAndDiagonal) {
  EXPECT_TRUE(near(expm(Matrix::Zero(3, 3)), Matrix::Identity(3, 3), 1e-15));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = -1.7;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = std::exp(0.3);
  expected(1, 1) = std::exp(-1.7);
  EXPECT_TRUE(near(expm(d), expected, 1e-13));
}

TEST(Expm, InverseIdentity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(3, 3, seed);
    EXPECT_TRUE(near(expm(a) * expm(-a), Matrix::Identity(3, 3), 1e-12));
  }
}

TEST(Expm, OverflowIsNumericalBreakdown) {
  EXPECT_THROW(expm(1e6 * Matrix::Identity(2, 2)), NumericalBreakdown);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(expm(bad), NumericalBreakdown);
}

}  // namespace
}  // namespace mfioc
