#ifndef POPADJUST_LINALG_HPP
#define POPADJUST_LINALG_HPP

#include <cstddef>
#include <vector>

#include "popadjust/errors.hpp"

namespace popadjust {

using Vector = std::vector<double>;

/// Dense row-major matrix. Everything in this library is small (designs are
/// N x p with p <= ~10), so a flat std::vector with naive kernels is plenty.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

  Vector row(std::size_t i) const {
    return Vector(row_ptr(i), row_ptr(i) + cols_);
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// vector helpers
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm_inf(const Vector& v);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& v);
double vector_mean(const Vector& v);
// linearly interpolated order statistic, p in [0,1]
double sample_quantile(Vector values, double p);
/// Sample variance (n - 1 divisor). Throws ConfigError for n < 2.
double vector_variance(const Vector& v);
double vector_sd(const Vector& v);

// matrix helpers
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
/// a' * x where a is N x p and x has length N.
Vector matvec_t(const Matrix& a, const Vector& x);
Matrix transpose(const Matrix& a);

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Only the lower triangle of the input is read. Throws NotPosDefError when a
/// pivot is nonpositive (or negligibly small relative to the diagonal scale).
Matrix cholesky(const Matrix& a);

/// Solve (L L') x = b given the lower Cholesky factor L.
Vector cholesky_solve(const Matrix& chol_lower, const Vector& b);

/// Inverse of (L L') given the lower Cholesky factor L.
Matrix cholesky_inverse(const Matrix& chol_lower);

/// Solve A x = b for symmetric positive definite A.
Vector spd_solve(const Matrix& a, const Vector& b);

/// Inverse of a symmetric positive definite matrix.
Matrix spd_inverse(const Matrix& a);

}  // namespace popadjust

#endif
