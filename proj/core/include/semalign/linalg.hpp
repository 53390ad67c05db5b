#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace semalign {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// m * v for a column vector v.
Vector matvec(const Matrix& m, std::span<const double> v);
// m^T * v
Vector matvec_t(const Matrix& m, std::span<const double> v);

double frobenius_norm(const Matrix& m);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

bool all_finite(std::span<const double> v);
// Throws InvalidMatrix naming `what` when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

// Thin SVD with singular values below rcond * sigma_max dropped.
struct SvdResult {
  Matrix u;      // rows x rank
  Vector sigma;  // descending
  Matrix vt;     // rank x cols
  double rcond = 0.0;

  std::size_t rank() const { return sigma.size(); }
  Matrix reconstruct() const;
};

// 1e-10 * max(rows, cols).
double default_rcond(std::size_t rows, std::size_t cols);

// One-sided Jacobi SVD. A negative rcond selects default_rcond.
SvdResult svd(const Matrix& m, double rcond = -1.0);

// Moore-Penrose pseudoinverse (cols x rows). A negative rcond selects
// default_rcond.
Matrix pseudoinverse(const Matrix& w, double rcond = -1.0);

// <u,v> / (|u| |v|). Throws ZeroVector if either argument is zero.
double cosine(std::span<const double> u, std::span<const double> v);

// (<r,s>/<s,s>) s. Throws ZeroVector if s is zero.
Vector project(std::span<const double> r, std::span<const double> s);

// Linear CKA between two sample-by-feature matrices with the same sample
// count. Feature counts may differ.
double linear_cka(const Matrix& x, const Matrix& y);

}  // namespace semalign
