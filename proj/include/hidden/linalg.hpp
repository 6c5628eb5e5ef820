#pragma once

// Small dense containers and vector helpers shared across the library.
// Everything is double precision; shapes are validated by the callers
// that own the data.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hidden {

using Vec = std::vector<double>;

template <typename T>
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> a;

  Table() = default;
  Table(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), a(r * c, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  std::span<T> row(std::size_t i) { return {a.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const { return {a.data() + i * cols, cols}; }

  bool same_shape(const Table& o) const { return rows == o.rows && cols == o.cols; }
};

using Mat = Table<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Sum of squares with an overflow-safe fallback for extreme magnitudes.
inline double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  if (std::isfinite(s)) return s;
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  if (m == 0.0 || !std::isfinite(m)) return s;
  double t = 0.0;
  for (double v : x) {
    const double r = v / m;
    t += r * r;
  }
  return t * m * m;
}

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  if (std::isfinite(s)) return std::sqrt(s);
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  if (m == 0.0 || !std::isfinite(m)) return std::sqrt(s);
  double t = 0.0;
  for (double v : x) {
    const double r = v / m;
    t += r * r;
  }
  return m * std::sqrt(t);
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace hidden
