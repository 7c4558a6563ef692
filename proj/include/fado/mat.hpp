#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fado {

// Dense row-major matrix of doubles. Vectors are 1 x n rows by convention.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
    if (a.size() != static_cast<size_t>(r) * c) throw std::invalid_argument("Mat: data size mismatch");
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat full(int r, int c, double v) {
    Mat m(r, c);
    for (auto& x : m.a) x = v;
    return m;
  }
  static Mat row(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Mat(1, n, std::move(v));
  }
};

inline void check_shape(const Mat& m, int r, int c, const char* what) {
  if (m.rows != r || m.cols != c)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(r) + "x" +
                                std::to_string(c) + ", got " + std::to_string(m.rows) + "x" +
                                std::to_string(m.cols));
}

// C = A * B
inline Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
  Mat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = &x.a[static_cast<size_t>(i) * x.cols];
    double* oi = &out.a[static_cast<size_t>(i) * out.cols];
    for (int k = 0; k < x.cols; ++k) {
      double v = xi[k];
      if (v == 0.0) continue;
      const double* yk = &y.a[static_cast<size_t>(k) * y.cols];
      for (int j = 0; j < y.cols; ++j) oi[j] += v * yk[j];
    }
  }
  return out;
}

inline Mat transpose(const Mat& x) {
  Mat out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  return out;
}

inline bool all_finite(const Mat& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double max_abs_diff(const Mat& x, const Mat& y) {
  if (!x.same_shape(y)) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (size_t i = 0; i < x.a.size(); ++i) d = std::max(d, std::abs(x.a[i] - y.a[i]));
  return d;
}

}  // namespace fado
