#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "semalign/errors.hpp"
#include "semalign/semantics.hpp"

namespace semalign {
namespace {

using testing::random_matrix;

Matrix gauss_jordan_inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double m = a(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= m * a(c, k);
        inv(r, k) -= m * inv(c, k);
      }
    }
  }
  return inv;
}

TEST(OutputBases, NormalizedRowsOfClosedFormPseudoinverse) {
  Rng rng(1);
  Matrix w = random_matrix(6, 20, rng);  // D x v, full row rank
  Matrix pinv = matmul(transpose(w), gauss_jordan_inverse(matmul_nt(w, w)));  // v x D
  SemanticBasisSet s = output_bases(w);
  ASSERT_EQ(s.dim(), 6u);
  ASSERT_EQ(s.count(), 20u);
  EXPECT_EQ(s.effective_rank, 6u);
  for (std::size_t i = 0; i < 20; ++i) {
    double nrm = norm(pinv.row(i));
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(s.s(c, i), pinv(i, c) / nrm, 1e-10);
  }
}

TEST(OutputBases, ZeroColumnIsDegenerate) {
  Rng rng(2);
  Matrix w = random_matrix(4, 8, rng);
  for (std::size_t r = 0; r < 4; ++r) w(r, 3) = 0.0;
  EXPECT_THROW(output_bases(w), DegenerateBasis);
}

TEST(InputAndRandomBases, UnitColumns) {
  Rng rng(3);
  Matrix emb = random_matrix(12, 5, rng);
  SemanticBasisSet in = input_bases(emb);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_NEAR(norm(in.s.col(i)), 1.0, 1e-12);
    EXPECT_NEAR(in.s(0, i), emb(i, 0) / norm(emb.row(i)), 1e-12);
  }
  SemanticBasisSet r1 = random_bases(5, 30, 9), r2 = random_bases(5, 30, 9);
  EXPECT_EQ(r1.s, r2.s);
  EXPECT_NE(r1.s, random_bases(5, 30, 10).s);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(norm(r1.s.col(i)), 1.0, 1e-12);
}

TEST(Decompose, CoefficientsAreCosines) {
  Rng rng(4);
  SemanticBasisSet b = random_bases(7, 15, 1);
  Vector h(7);
  for (auto& x : h) x = rng.normal();
  SemanticCoefficients a = decompose(h, b);
  EXPECT_NEAR(a.source_norm, norm(h), 1e-12);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(a.a[i], cosine(h, b.s.col(i)), 1e-12);
  EXPECT_THROW(decompose(Vector(7, 0.0), b), ZeroVector);
  EXPECT_THROW(decompose(Vector(6, 1.0), b), ShapeError);
}

TEST(Recompose, OrthonormalBasisRecoversDirection) {
  SemanticBasisSet b;
  b.s = Matrix::identity(4);
  Vector h{1, -2, 0.5, 3};
  Vector back = recompose(decompose(h, b), b);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back[i], h[i] / norm(h), 1e-14);
}

TEST(CrossSpace, VocabMismatchAndRowForm) {
  SemanticBasisSet t = random_bases(8, 20, 1), s = random_bases(4, 20, 2);
  Rng rng(5);
  Matrix h = random_matrix(3, 8, rng);
  for (std::size_t c = 0; c < 8; ++c) h(1, c) = 0.0;
  Matrix out = cross_space_rows(h, t, s);
  ASSERT_EQ(out.rows(), 3u);
  ASSERT_EQ(out.cols(), 4u);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(1, c), 0.0);
  Vector single = cross_space_target(h.row(2), t, s);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out(2, c), single[c], 1e-12);
  EXPECT_THROW(cross_space_target(h.row(0), t, random_bases(4, 19, 2)), VocabMismatch);
}

TEST(NearestBasis, LowestIndexOnTies) {
  SemanticBasisSet b;
  b.s = Matrix::from_rows({{1, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(nearest_basis(Vector{2, 0}, b), 0u);
  EXPECT_EQ(nearest_basis(Vector{0, 1}, b), 2u);
}

TEST(ValidateResolution, OneValuePerLayerAndSideInRange) {
  LmParams m = init_lm(testing::tiny_config(3, 8, 2, 24));
  Rng rng(6);
  Dataset d = testing::random_dataset(4, 5, 24, rng);
  std::map<BasisSide, SemanticBasisSet> sides;
  for (BasisSide s : {BasisSide::kOutput, BasisSide::kInput, BasisSide::kRandom})
    sides[s] = compute_bases(m, s, -1.0, 3);
  ValidationCurve c = validate_resolution(m, d, sides, "m", "d");
  ASSERT_EQ(c.per_side.size(), 3u);
  for (auto& [side, vals] : c.per_side) {
    ASSERT_EQ(vals.size(), 3u);
    for (double v : vals) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(BasisSide, NamesRoundTrip) {
  for (BasisSide s : {BasisSide::kOutput, BasisSide::kInput, BasisSide::kRandom})
    EXPECT_EQ(parse_basis_side(to_string(s)), s);
  EXPECT_THROW(parse_basis_side("sideways"), ConfigError);
}

}  // namespace
}  // namespace semalign
