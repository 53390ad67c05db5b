#include "semalign/linalg.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data(), m.rows(), m.cols()); }
MutMap view(Matrix& m) { return MutMap(m.data(), m.rows(), m.cols()); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

// Hestenes one-sided Jacobi on a tall matrix (rows >= cols). Columns of `a`
// are rotated until mutually orthogonal; `v` accumulates the rotations.
void jacobi_orthogonalize(Matrix& a, Matrix& v) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0;
        double beta = 0.0;
        double gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          alpha += ap * ap;
          beta += aq * aq;
          gamma += ap * aq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
}

SvdResult svd_tall(const Matrix& m, double rcond) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  Matrix a = m;
  Matrix v = Matrix::identity(cols);
  jacobi_orthogonalize(a, v);

  Vector norms(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double sigma_max = cols == 0 ? 0.0 : norms[order[0]];
  const double cutoff = rcond * sigma_max;
  std::size_t rank = 0;
  while (rank < cols && norms[order[rank]] > cutoff && norms[order[rank]] > 0.0) ++rank;

  SvdResult out;
  out.rcond = rcond;
  out.u = Matrix(rows, rank);
  out.vt = Matrix(rank, cols);
  out.sigma.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t j = order[k];
    const double s = norms[j];
    out.sigma[k] = s;
    for (std::size_t i = 0; i < rows; ++i) out.u(i, k) = a(i, j) / s;
    for (std::size_t i = 0; i < cols; ++i) out.vt(k, i) = v(i, j);
  }
  return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(values_.size()) + " values for shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& x : out.values()) x *= s;
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  if (!out.empty() && a.cols() > 0) view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  Matrix out(a.cols(), b.cols());
  if (!out.empty() && a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  Matrix out(a.rows(), b.rows());
  if (!out.empty() && a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Vector matvec(const Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw ShapeError("matvec: length mismatch");
  Vector out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
  return out;
}

Vector matvec_t(const Matrix& m, std::span<const double> v) {
  if (v.size() != m.rows()) throw ShapeError("matvec_t: length mismatch");
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double vr = v[r];
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * vr;
  }
  return out;
}

double frobenius_norm(const Matrix& m) { return norm(m.values()); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m.values())) throw InvalidMatrix(std::string(what) + ": non-finite entry");
}

Matrix SvdResult::reconstruct() const {
  Matrix us = u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t k = 0; k < us.cols(); ++k) us(r, k) *= sigma[k];
  return matmul(us, vt);
}

double default_rcond(std::size_t rows, std::size_t cols) {
  return 1e-10 * static_cast<double>(std::max(rows, cols));
}

SvdResult svd(const Matrix& m, double rcond) {
  if (m.empty()) throw InvalidMatrix("svd: empty matrix");
  require_finite(m, "svd");
  if (rcond < 0.0) rcond = default_rcond(m.rows(), m.cols());
  if (m.rows() >= m.cols()) return svd_tall(m, rcond);
  // Wide input: factor the transpose and swap the roles of U and V.
  SvdResult t = svd_tall(transpose(m), rcond);
  SvdResult out;
  out.rcond = rcond;
  out.sigma = std::move(t.sigma);
  out.u = transpose(t.vt);
  out.vt = transpose(t.u);
  return out;
}

Matrix pseudoinverse(const Matrix& w, double rcond) {
  const SvdResult f = svd(w, rcond);
  // W+ = V diag(1/sigma) U^T
  Matrix v_scaled = transpose(f.vt);
  for (std::size_t r = 0; r < v_scaled.rows(); ++r)
    for (std::size_t k = 0; k < f.rank(); ++k) v_scaled(r, k) /= f.sigma[k];
  if (f.rank() == 0) return Matrix(w.cols(), w.rows());
  return matmul_nt(v_scaled, f.u);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine: length mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine: zero vector");
  const double c = dot(u, v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

Vector project(std::span<const double> r, std::span<const double> s) {
  const double ss = dot(s, s);
  if (ss == 0.0) throw ZeroVector("project: zero direction");
  const double coeff = dot(r, s) / ss;
  Vector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = coeff * s[i];
  return out;
}

namespace {

Matrix center_columns(const Matrix& x) {
  Matrix out = x;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= n;
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) -= mean;
  }
  return out;
}

}  // namespace

double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw ShapeError("linear_cka: sample counts differ");
  if (x.rows() < 2) throw DegenerateInput("linear_cka: fewer than 2 samples");
  require_finite(x, "linear_cka");
  require_finite(y, "linear_cka");
  const Matrix xc = center_columns(x);
  const Matrix yc = center_columns(y);
  const double cross = frobenius_norm(matmul_tn(yc, xc));
  const double xx = frobenius_norm(matmul_tn(xc, xc));
  const double yy = frobenius_norm(matmul_tn(yc, yc));
  if (xx == 0.0 || yy == 0.0) throw DegenerateInput("linear_cka: zero-variance input");
  return std::clamp(cross * cross / (xx * yy), 0.0, 1.0);
}

}  // namespace semalign
