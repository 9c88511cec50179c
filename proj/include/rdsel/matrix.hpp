#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rdsel/errors.hpp"

namespace rdsel {

// Dense row-major matrix of doubles. Small and value-like; every learned
// quantity in the library (inputs, features, parameters) lives in one.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline bool all_finite(const Matrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + ")");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows)
    throw DimensionError("matmul_tn: row counts differ");
  Matrix c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = ak[i];
      double* ci = c.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// C = A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols)
    throw DimensionError("matmul_nt: column counts differ");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

// y += alpha * x
inline void axpy(Matrix& y, double alpha, const Matrix& x) {
  if (!y.same_shape(x)) throw DimensionError("axpy: shape mismatch");
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw DimensionError("hcat: row counts differ");
  Matrix c(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) ci[j] = ai[j];
    for (std::size_t j = 0; j < b.cols; ++j) ci[a.cols + j] = bi[j];
  }
  return c;
}

inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = m.row(idx[i]);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j];
  }
  return out;
}

inline std::vector<double> col_mean(const Matrix& m) {
  std::vector<double> mean(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* mi = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) mean[j] += mi[j];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows);
  return mean;
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data) v = std::max(v, std::fabs(x));
  return v;
}

}  // namespace rdsel
