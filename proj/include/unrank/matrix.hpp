#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace unrank {

// Dense row-major matrix of doubles. Embedding tables are small enough at
// desk scale that value semantics keep the code simple.
struct Matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

  double* row(std::int64_t i) { return data.data() + i * cols; }
  const double* row(std::int64_t i) const { return data.data() + i * cols; }
  std::span<double> row_span(std::int64_t i) { return {row(i), static_cast<std::size_t>(cols)}; }
  std::span<const double> row_span(std::int64_t i) const { return {row(i), static_cast<std::size_t>(cols)}; }

  double& at(std::int64_t i, std::int64_t j) { return data[i * cols + j]; }
  double at(std::int64_t i, std::int64_t j) const { return data[i * cols + j]; }

  void set_zero() { data.assign(data.size(), 0.0); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace unrank
