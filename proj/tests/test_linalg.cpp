#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "semalign/errors.hpp"
#include "semalign/linalg.hpp"
#include "semalign/rng.hpp"

namespace semalign {
namespace {

using testing::random_matrix;

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(1);
  Matrix a = random_matrix(5, 7, rng);
  Matrix b = random_matrix(7, 3, rng);
  Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 7; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-12);
    }
  EXPECT_NEAR(frobenius_norm(matmul_tn(transpose(a), b) - c), 0.0, 1e-12);
  EXPECT_NEAR(frobenius_norm(matmul_nt(a, transpose(b)) - c), 0.0, 1e-12);
  EXPECT_THROW(matmul(a, a), ShapeError);
}

TEST(Svd, ReconstructsAndIsOrthonormal) {
  Rng rng(2);
  for (auto [r, c] : {std::pair{6, 4}, {4, 9}, {12, 12}}) {
    Matrix m = random_matrix(r, c, rng);
    SvdResult s = svd(m);
    EXPECT_NEAR(frobenius_norm(s.reconstruct() - m), 0.0, 1e-10);
    Matrix utu = matmul_tn(s.u, s.u);
    EXPECT_NEAR(frobenius_norm(utu - Matrix::identity(s.rank())), 0.0, 1e-10);
    for (std::size_t i = 1; i < s.rank(); ++i) EXPECT_GE(s.sigma[i - 1], s.sigma[i]);
  }
}

TEST(Svd, KnownSingularValues) {
  Matrix m = Matrix::from_rows({{3, 0}, {0, -2}, {0, 0}});
  SvdResult s = svd(m);
  ASSERT_EQ(s.rank(), 2u);
  EXPECT_NEAR(s.sigma[0], 3.0, 1e-14);
  EXPECT_NEAR(s.sigma[1], 2.0, 1e-14);
}

TEST(Svd, DropsTinyValuesAndRejectsNan) {
  Matrix m = Matrix::from_rows({{1, 2}, {2, 4}});
  EXPECT_EQ(svd(m).rank(), 1u);
  m(0, 0) = std::nan("");
  EXPECT_THROW(svd(m), InvalidMatrix);
}

TEST(Pseudoinverse, LeastSquaresOracle) {
  // Full column rank: pinv(A) = (A^T A)^{-1} A^T, checked on a 3x2 by hand.
  Matrix a = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  Matrix p = pseudoinverse(a);
  Matrix expect = Matrix::from_rows({{2.0 / 3, -1.0 / 3, 1.0 / 3}, {-1.0 / 3, 2.0 / 3, 1.0 / 3}});
  EXPECT_NEAR(frobenius_norm(p - expect), 0.0, 1e-12);
}

TEST(Pseudoinverse, RankDeficientMoorePenrose) {
  Rng rng(3);
  Matrix a = matmul(random_matrix(10, 3, rng), random_matrix(3, 7, rng));
  Matrix p = pseudoinverse(a);
  EXPECT_NEAR(frobenius_norm(matmul(matmul(a, p), a) - a), 0.0, 1e-8);
  EXPECT_NEAR(frobenius_norm(matmul(matmul(p, a), p) - p), 0.0, 1e-8);
  Matrix ap = matmul(a, p);
  Matrix pa = matmul(p, a);
  EXPECT_NEAR(frobenius_norm(ap - transpose(ap)), 0.0, 1e-8);
  EXPECT_NEAR(frobenius_norm(pa - transpose(pa)), 0.0, 1e-8);
}

TEST(Cosine, BoundsAndZero) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    Vector u(5), v(5);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    double c = cosine(u, v);
    EXPECT_LE(std::abs(c), 1.0 + 1e-15);
  }
  Vector z(3, 0.0), o{1, 2, 3};
  EXPECT_THROW(cosine(z, o), ZeroVector);
  EXPECT_NEAR(cosine(o, o), 1.0, 1e-15);
}

TEST(Project, OntoAxis) {
  Vector r{3, 4}, s{2, 0};
  Vector p = project(r, s);
  EXPECT_DOUBLE_EQ(p[0], 3.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_THROW(project(r, Vector{0, 0}), ZeroVector);
}

TEST(Cka, SelfIsOneAndInvariant) {
  Rng rng(5);
  Matrix x = random_matrix(40, 6, rng);
  Matrix y = random_matrix(40, 9, rng);
  EXPECT_NEAR(linear_cka(x, x), 1.0, 1e-12);
  // Orthogonal transform from an SVD, plus isotropic scaling.
  Matrix q = svd(random_matrix(9, 9, rng)).u;
  double base = linear_cka(x, y);
  EXPECT_NEAR(linear_cka(x, 3.5 * matmul(y, q)), base, 1e-10);
  EXPECT_NEAR(linear_cka(x, y), linear_cka(y, x), 1e-12);
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
}

TEST(Rng, ReproducibleAndDerivedStreamsDiffer) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_EQ(derive_seed(9, 4), derive_seed(9, 4));
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.index(7), 7u);
  }
}

}  // namespace
}  // namespace semalign
