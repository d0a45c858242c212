#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace smf {

// Minimal dense row-major matrix. Deliberately small: the heavy lifting in
// this library happens on implicit (graph / kernel) representations, and the
// dense form is only materialized for norm oracles and small tests.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // y = M x
  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    if (x.size() != cols_) throw std::invalid_argument("Matrix::multiply: size mismatch");
    y.assign(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double acc = 0.0;
      const double* row = a_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
  }

  // y = M^T x
  void multiply_transpose(const std::vector<double>& x, std::vector<double>& y) const {
    if (x.size() != rows_) throw std::invalid_argument("Matrix::multiply_transpose: size mismatch");
    y.assign(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double xi = x[i];
      const double* row = a_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * xi;
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

}  // namespace smf
