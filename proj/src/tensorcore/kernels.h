// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <type_traits>

#include <cblas.h>

namespace gldnet::kernels {

// Row-major dense products accumulating into c. float goes through
// cblas_sgemm; double stays on plain loops because the dgemm kernels of the
// system OpenBLAS (0.3.20, SkylakeX target) return wrong results for many
// shapes. The double path is the verification precision, so speed there is
// secondary to a fixed, exact reduction order.

inline void sgemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n,
                  std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb,
                  float* c) {
  if (m == 0 || n == 0 || k == 0) return;
  cblas_sgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k),
              1.0f, a, static_cast<int>(lda), b, static_cast<int>(ldb), 1.0f, c, static_cast<int>(n));
}

// c[M x N] += a[M x K] * b[K x N]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if constexpr (std::is_same_v<T, float>) {
    sgemm(CblasNoTrans, CblasNoTrans, m, n, k, a, k, b, n, c);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

// c[M x N] += a[M x K] * b[N x K]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if constexpr (std::is_same_v<T, float>) {
    sgemm(CblasNoTrans, CblasTrans, m, n, k, a, k, b, k, c);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        T acc = 0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c[i * n + j] += acc;
      }
    }
  }
}

// c[M x N] += a[K x M]^T * b[K x N]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if constexpr (std::is_same_v<T, float>) {
    sgemm(CblasTrans, CblasNoTrans, m, n, k, a, m, b, n, c);
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      const T* arow = a + p * m;
      const T* brow = b + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const T av = arow[i];
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace gldnet::kernels
