#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semalign/linalg.hpp"
#include "semalign/model.hpp"

namespace semalign {

enum class BasisSide { kOutput, kInput, kRandom };

std::string to_string(BasisSide side);
BasisSide parse_basis_side(const std::string& name);

// Unit-norm latent directions, one column per vocabulary label. Column i of
// two basis sets built from models sharing a vocabulary refers to the same
// label.
struct SemanticBasisSet {
  Matrix s;  // D x m
  BasisSide side = BasisSide::kOutput;
  std::string source_model_id;
  double rcond_used = 0.0;
  std::size_t effective_rank = 0;
  std::uint64_t seed = 0;  // random side only

  std::size_t dim() const { return s.rows(); }
  std::size_t count() const { return s.cols(); }
  std::string checksum() const;
};

struct SemanticCoefficients {
  Vector a;  // cosines, one per basis column
  double source_norm = 0.0;
};

// Output side: column i is row i of pinv(lm_head), normalized. lm_head is
// D x v. Throws DegenerateBasis when a pseudoinverse row vanishes.
SemanticBasisSet output_bases(const Matrix& lm_head, double rcond = -1.0,
                              std::string source_model_id = {});
// Input side: normalized token-embedding rows (embedding is v x D).
SemanticBasisSet input_bases(const Matrix& embedding, std::string source_model_id = {});
// Random side: `count` unit columns in R^dim drawn from `seed`.
SemanticBasisSet random_bases(std::size_t dim, std::size_t count, std::uint64_t seed,
                              std::string source_model_id = {});

SemanticBasisSet compute_bases(const LmParams& model, BasisSide side, double rcond = -1.0,
                               std::uint64_t seed = 0);

// a = S^T h / |h|. Throws ZeroVector, ShapeError.
SemanticCoefficients decompose(std::span<const double> h, const SemanticBasisSet& bases);
// S a. Throws ShapeError.
Vector recompose(const SemanticCoefficients& coeffs, const SemanticBasisSet& bases);
// recompose(decompose(h, teacher), student). Throws VocabMismatch.
Vector cross_space_target(std::span<const double> h_teacher, const SemanticBasisSet& teacher,
                          const SemanticBasisSet& student);

// Row-wise versions over a tokens x D matrix. Zero rows map to zero rows.
Matrix decompose_rows(const Matrix& h, const SemanticBasisSet& bases);
Matrix recompose_rows(const Matrix& coeffs, const SemanticBasisSet& bases);
Matrix cross_space_rows(const Matrix& h_teacher, const SemanticBasisSet& teacher,
                        const SemanticBasisSet& student);

// argmax_i cos(h, s_i), lowest index on ties. Throws ZeroVector.
std::size_t nearest_basis(std::span<const double> h, const SemanticBasisSet& bases);

// Per-layer mean recomposition cosine, one curve per basis side.
struct ValidationCurve {
  std::string model_id;
  std::string dataset_id;
  std::map<BasisSide, Vector> per_side;  // side -> one value per layer
};

// For each layer and side: mean over token positions of
// cos(h, recompose(decompose(h))). Zero hidden rows are skipped.
ValidationCurve validate_resolution(const LmParams& model, const Dataset& dataset,
                                    const std::map<BasisSide, SemanticBasisSet>& bases_by_side,
                                    std::string model_id = {}, std::string dataset_id = {});

}  // namespace semalign
