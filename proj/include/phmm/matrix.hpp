#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace phmm {

/// Dense row-major matrix of doubles. Multiplication uses a fixed loop
/// order so repeated evaluations are bit-identical.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return d_.empty(); }

  double& operator()(int r, int c) { return d_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) { return {d_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(int r) const {
    return {d_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

/// c = a * b with the canonical (i, j, k-ascending) accumulation order.
inline void multiply_into(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c;
  multiply_into(a, b, c);
  return c;
}

/// out = v^T * m (row vector times matrix), k ascending.
inline void row_times_matrix(std::span<const double> v, const Matrix& m, std::span<double> out) {
  if (static_cast<int>(v.size()) != m.rows() || static_cast<int>(out.size()) != m.cols())
    throw std::invalid_argument("row_times_matrix: dimension mismatch");
  for (int j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (int k = 0; k < m.rows(); ++k) s += v[k] * m(k, j);
    out[j] = s;
  }
}

}  // namespace phmm
