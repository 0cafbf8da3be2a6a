#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phmm/matrix.hpp"

namespace phmm {

// Construction tolerance: inputs whose sum deviates from 1 by at most this
// much are renormalized; larger deviations are rejected as logic errors.
inline constexpr double kSimplexSlack = 1e-9;

/// Probability vector. Entries are non-negative and sum to 1 within 1e-12
/// after construction.
class Simplex {
 public:
  explicit Simplex(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("Simplex: empty vector");
    double sum = 0.0;
    for (double v : w_) {
      if (!(v >= 0.0)) throw std::invalid_argument("Simplex: negative or NaN entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexSlack)
      throw std::invalid_argument("Simplex: sum deviates from 1 by " + std::to_string(sum - 1.0));
    if (std::abs(sum - 1.0) > 1e-12)
      for (auto& v : w_) v /= sum;
  }

  /// Rescales any non-negative vector with positive total to the simplex.
  static Simplex normalized(std::vector<double> w) {
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0)) throw std::invalid_argument("Simplex: negative or NaN entry");
      sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("Simplex: zero total mass");
    if (std::abs(sum - 1.0) > 1e-12)
      for (auto& v : w) v /= sum;
    return Simplex(Unchecked{}, std::move(w));
  }

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[i]; }
  const std::vector<double>& weights() const { return w_; }
  std::span<const double> span() const { return w_; }

  bool operator==(const Simplex&) const = default;

 private:
  struct Unchecked {};
  Simplex(Unchecked, std::vector<double> w) : w_(std::move(w)) {}
  std::vector<double> w_;
};

/// Row-stochastic matrix: every row obeys the Simplex rules.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(Matrix m) : m_(std::move(m)) { validate_and_fix(false); }

  static StochasticMatrix normalized(Matrix m) {
    StochasticMatrix s;
    s.m_ = std::move(m);
    s.validate_and_fix(true);
    return s;
  }

  static StochasticMatrix from_rows(const std::vector<Simplex>& rows) {
    if (rows.empty()) throw std::invalid_argument("StochasticMatrix: no rows");
    int cols = rows[0].size();
    Matrix m(static_cast<int>(rows.size()), cols);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw std::invalid_argument("StochasticMatrix: ragged rows");
      for (int j = 0; j < cols; ++j) m(static_cast<int>(i), j) = rows[i][j];
    }
    StochasticMatrix s;
    s.m_ = std::move(m);
    return s;
  }

  int rows() const { return m_.rows(); }
  int cols() const { return m_.cols(); }
  double operator()(int r, int c) const { return m_(r, c); }
  std::span<const double> row(int r) const { return m_.row(r); }
  const Matrix& matrix() const { return m_; }

  Simplex row_simplex(int r) const {
    auto s = m_.row(r);
    return Simplex::normalized(std::vector<double>(s.begin(), s.end()));
  }

  bool operator==(const StochasticMatrix&) const = default;

 private:
  StochasticMatrix() = default;

  void validate_and_fix(bool loose) {
    if (m_.rows() < 1 || m_.cols() < 1) throw std::invalid_argument("StochasticMatrix: empty");
    for (int i = 0; i < m_.rows(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < m_.cols(); ++j) {
        if (!(m_(i, j) >= 0.0))
          throw std::invalid_argument("StochasticMatrix: negative entry in row " + std::to_string(i));
        sum += m_(i, j);
      }
      if (!loose && std::abs(sum - 1.0) > kSimplexSlack)
        throw std::invalid_argument("StochasticMatrix: row " + std::to_string(i) +
                                    " sum deviates from 1 by " + std::to_string(sum - 1.0));
      if (!(sum > 0.0))
        throw std::invalid_argument("StochasticMatrix: row " + std::to_string(i) + " has zero mass");
      if (std::abs(sum - 1.0) > 1e-12)
        for (int j = 0; j < m_.cols(); ++j) m_(i, j) /= sum;
    }
  }

  Matrix m_;
};

}  // namespace phmm
