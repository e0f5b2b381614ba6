#pragma once

// OpenMP dense kernels. Each output element is produced by exactly one
// thread with a fixed summation order, so results do not depend on the
// thread count.

#include <cstddef>
#include <cstdint>

#include "edithumor/tensor.hpp"

namespace edithumor::kernels {

// Below this many multiply-adds a loop runs on the calling thread.
inline constexpr std::int64_t kParallelThreshold = 1 << 14;

int max_threads();
void set_threads(int n);

/// C (m x n) = A (m x k) * B (k x n), or C += when `accumulate`.
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m * n * k) > kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    T* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T{});
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C (m x n) += A^T * B with A (k x m), B (k x n).
template <typename T>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m * n * k) > kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[p * m + i];
      if (av == T{}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// out[j] += sum_i A[i][j] over rows of A (rows x cols).
template <typename T>
void column_sums_acc(std::size_t rows, std::size_t cols, const T* a, T* out) {
  const auto n = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(rows * cols) > kParallelThreshold)
  for (std::int64_t j = 0; j < n; ++j) {
    T acc{};
    for (std::size_t i = 0; i < rows; ++i) acc += a[i * cols + j];
    out[j] += acc;
  }
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& m) {
  Matrix<T> out(m.cols(), m.rows());
  const auto cols = static_cast<std::int64_t>(m.cols());
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m.size()) > kParallelThreshold)
  for (std::int64_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) out(j, i) = m(i, j);
  }
  return out;
}

}  // namespace edithumor::kernels
