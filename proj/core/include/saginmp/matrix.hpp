#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace saginmp {

// Small dense row-major matrix. Used by the autodiff core and the NNPE
// solver; dimensions here are tiny (d <= a few dozen), so no BLAS.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat from(int r, int c, std::vector<double> v) {
    Mat m(r, c);
    if (v.size() != m.a.size()) throw std::invalid_argument("Mat::from size mismatch");
    m.a = std::move(v);
    return m;
  }

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  int size() const { return rows * cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }
};

inline Mat matmul(const Mat& x, const Mat& y) {
  assert(x.cols == y.rows);
  Mat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const double xv = x(i, k);
      if (xv == 0.0) continue;
      const double* yr = &y.a[static_cast<size_t>(k) * y.cols];
      double* or_ = &out.a[static_cast<size_t>(i) * out.cols];
      for (int j = 0; j < y.cols; ++j) or_[j] += xv * yr[j];
    }
  }
  return out;
}

inline Mat transposed(const Mat& x) {
  Mat out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  return out;
}

// Solve A x = b for symmetric positive definite A (in-place Cholesky).
// Throws if A is not SPD within roundoff.
inline std::vector<double> solve_spd(Mat A, std::vector<double> b) {
  const int n = A.rows;
  if (A.cols != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_spd: shape mismatch");
  // L L^T factorization, L stored in lower triangle
  for (int j = 0; j < n; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (d <= 0.0) throw std::runtime_error("solve_spd: matrix not positive definite");
    const double ljj = std::sqrt(d);
    A(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
      A(i, j) = s / ljj;
    }
  }
  // forward: L y = b
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= A(i, k) * b[k];
    b[i] = s / A(i, i);
  }
  // backward: L^T x = y
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= A(k, i) * b[k];
    b[i] = s / A(i, i);
  }
  return b;
}

}  // namespace saginmp
