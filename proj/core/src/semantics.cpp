#include "semalign/semantics.hpp"

#include <algorithm>
#include <cmath>

#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

namespace {

// Normalizes each column in place; returns false if any column is zero.
bool normalize_columns(Matrix& s) {
  for (std::size_t c = 0; c < s.cols(); ++c) {
    double n2 = 0.0;
    for (std::size_t r = 0; r < s.rows(); ++r) n2 += s(r, c) * s(r, c);
    if (n2 == 0.0) return false;
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t r = 0; r < s.rows(); ++r) s(r, c) *= inv;
  }
  return true;
}

}  // namespace

std::string to_string(BasisSide side) {
  switch (side) {
    case BasisSide::kOutput: return "output";
    case BasisSide::kInput: return "input";
    case BasisSide::kRandom: return "random";
  }
  return "unknown";
}

BasisSide parse_basis_side(const std::string& name) {
  if (name == "output") return BasisSide::kOutput;
  if (name == "input") return BasisSide::kInput;
  if (name == "random") return BasisSide::kRandom;
  throw ConfigError("unknown basis side: " + name);
}

std::string SemanticBasisSet::checksum() const {
  Fnv1a h;
  h.update(to_string(side));
  h.update(s.values());
  return h.hex();
}

SemanticBasisSet output_bases(const Matrix& lm_head, double rcond, std::string source_model_id) {
  if (lm_head.empty()) throw InvalidMatrix("output_bases: empty lm_head");
  require_finite(lm_head, "output_bases");
  if (rcond < 0.0) rcond = default_rcond(lm_head.rows(), lm_head.cols());
  const SvdResult f = svd(lm_head, rcond);
  // pinv is v x D; its row i becomes column i of S (D x v).
  Matrix v_scaled = transpose(f.vt);
  for (std::size_t r = 0; r < v_scaled.rows(); ++r)
    for (std::size_t k = 0; k < f.rank(); ++k) v_scaled(r, k) /= f.sigma[k];
  SemanticBasisSet out;
  out.s = f.rank() == 0 ? Matrix(lm_head.rows(), lm_head.cols())
                        : transpose(matmul_nt(v_scaled, f.u));
  out.side = BasisSide::kOutput;
  out.source_model_id = std::move(source_model_id);
  out.rcond_used = rcond;
  out.effective_rank = f.rank();
  if (!normalize_columns(out.s))
    throw DegenerateBasis("output_bases: a pseudoinverse row is zero (label unreachable)");
  return out;
}

SemanticBasisSet input_bases(const Matrix& embedding, std::string source_model_id) {
  require_finite(embedding, "input_bases");
  SemanticBasisSet out;
  out.s = transpose(embedding);
  out.side = BasisSide::kInput;
  out.source_model_id = std::move(source_model_id);
  out.effective_rank = std::min(embedding.rows(), embedding.cols());
  if (!normalize_columns(out.s)) throw DegenerateBasis("input_bases: zero embedding row");
  return out;
}

SemanticBasisSet random_bases(std::size_t dim, std::size_t count, std::uint64_t seed,
                              std::string source_model_id) {
  Rng rng(derive_seed(seed, 0xba5e));
  SemanticBasisSet out;
  out.s = Matrix(dim, count);
  for (double& x : out.s.values()) x = rng.normal();
  out.side = BasisSide::kRandom;
  out.source_model_id = std::move(source_model_id);
  out.seed = seed;
  out.effective_rank = std::min(dim, count);
  if (!normalize_columns(out.s)) throw DegenerateBasis("random_bases: zero column");
  return out;
}

SemanticBasisSet compute_bases(const LmParams& model, BasisSide side, double rcond,
                               std::uint64_t seed) {
  const std::string id = model.checksum();
  switch (side) {
    case BasisSide::kOutput: return output_bases(model.lm_head(), rcond, id);
    case BasisSide::kInput: return input_bases(model.embedding(), id);
    case BasisSide::kRandom:
      return random_bases(model.config().hidden_dim, model.config().vocab_size, seed, id);
  }
  throw ConfigError("compute_bases: unknown side");
}

SemanticCoefficients decompose(std::span<const double> h, const SemanticBasisSet& bases) {
  if (h.size() != bases.dim())
    throw ShapeError("decompose: vector length " + std::to_string(h.size()) +
                     " != basis dimension " + std::to_string(bases.dim()));
  const double n = norm(h);
  if (n == 0.0) throw ZeroVector("decompose: zero vector");
  SemanticCoefficients out;
  out.source_norm = n;
  out.a = matvec_t(bases.s, h);
  for (double& x : out.a) x /= n;
  return out;
}

Vector recompose(const SemanticCoefficients& coeffs, const SemanticBasisSet& bases) {
  if (coeffs.a.size() != bases.count())
    throw ShapeError("recompose: " + std::to_string(coeffs.a.size()) + " coefficients for " +
                     std::to_string(bases.count()) + " bases");
  return matvec(bases.s, coeffs.a);
}

Vector cross_space_target(std::span<const double> h_teacher, const SemanticBasisSet& teacher,
                          const SemanticBasisSet& student) {
  if (teacher.count() != student.count())
    throw VocabMismatch("cross_space_target: teacher has " + std::to_string(teacher.count()) +
                        " bases, student " + std::to_string(student.count()));
  return recompose(decompose(h_teacher, teacher), student);
}

Matrix decompose_rows(const Matrix& h, const SemanticBasisSet& bases) {
  if (h.cols() != bases.dim()) throw ShapeError("decompose_rows: dimension mismatch");
  Matrix a = matmul(h, bases.s);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const double n = norm(h.row(r));
    auto ar = a.row(r);
    if (n == 0.0) {
      std::fill(ar.begin(), ar.end(), 0.0);
      continue;
    }
    for (double& x : ar) x /= n;
  }
  return a;
}

Matrix recompose_rows(const Matrix& coeffs, const SemanticBasisSet& bases) {
  if (coeffs.cols() != bases.count()) throw ShapeError("recompose_rows: count mismatch");
  return matmul_nt(coeffs, bases.s);
}

Matrix cross_space_rows(const Matrix& h_teacher, const SemanticBasisSet& teacher,
                        const SemanticBasisSet& student) {
  if (teacher.count() != student.count())
    throw VocabMismatch("cross_space_rows: teacher has " + std::to_string(teacher.count()) +
                        " bases, student " + std::to_string(student.count()));
  return recompose_rows(decompose_rows(h_teacher, teacher), student);
}

std::size_t nearest_basis(std::span<const double> h, const SemanticBasisSet& bases) {
  const SemanticCoefficients c = decompose(h, bases);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.a.size(); ++i)
    if (c.a[i] > c.a[best]) best = i;
  return best;
}

ValidationCurve validate_resolution(const LmParams& model, const Dataset& dataset,
                                    const std::map<BasisSide, SemanticBasisSet>& bases_by_side,
                                    std::string model_id, std::string dataset_id) {
  if (dataset.empty()) throw ConfigError("validate_resolution: empty dataset");
  const std::size_t layers = model.config().n_layers;
  ValidationCurve curve;
  curve.model_id = model_id.empty() ? model.checksum() : std::move(model_id);
  curve.dataset_id = std::move(dataset_id);

  std::map<BasisSide, Vector> sums;
  std::vector<std::size_t> counts(layers, 0);
  for (const auto& [side, bases] : bases_by_side) {
    if (bases.dim() != model.config().hidden_dim)
      throw ShapeError("validate_resolution: basis dimension does not match model");
    sums[side].assign(layers, 0.0);
  }

  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < dataset.size(); begin += kChunk) {
    const std::size_t end = std::min(dataset.size(), begin + kChunk);
    const TokenBatch batch =
        make_batch(std::span<const Example>(dataset.data() + begin, end - begin));
    const LayerTrace trace = forward_with_trace(model, batch);
    for (std::size_t l = 0; l < layers; ++l) {
      const Matrix& h = trace.per_layer[l];
      std::vector<std::size_t> live;
      for (std::size_t r = 0; r < h.rows(); ++r)
        if (norm(h.row(r)) > 0.0) live.push_back(r);
      counts[l] += live.size();
      for (const auto& [side, bases] : bases_by_side) {
        const Matrix rec = recompose_rows(decompose_rows(h, bases), bases);
        for (std::size_t r : live) {
          if (norm(rec.row(r)) == 0.0) continue;  // cosine 0 contribution
          sums[side][l] += cosine(h.row(r), rec.row(r));
        }
      }
    }
  }
  for (auto& [side, s] : sums) {
    for (std::size_t l = 0; l < layers; ++l)
      s[l] = counts[l] == 0 ? 0.0 : s[l] / static_cast<double>(counts[l]);
    curve.per_side[side] = s;
  }
  return curve;
}

}  // namespace semalign
