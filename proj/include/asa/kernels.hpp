#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "asa/util.hpp"

// Inner-loop kernels. The omp variants parallelize over output rows (or
// elements); every output element is produced by exactly one thread with the
// same serial accumulation order as the reference versions in
// kernels::serial, so results are bit-identical for any thread count.

namespace asa::kernels {

namespace serial {

// C[M x N] (+)= A[M x K] * B[K x N]
template <typename T>
void matmul_nn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(i) * K + k] * b[size_t(k) * N + j];
      c[size_t(i) * N + j] = s;
    }
  }
}

// C[M x N] (+)= A[M x K] * B[N x K]^T
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(i) * K + k] * b[size_t(j) * K + k];
      c[size_t(i) * N + j] = s;
    }
  }
}

// C[M x N] (+)= A[K x M]^T * B[K x N]
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(k) * M + i] * b[size_t(k) * N + j];
      c[size_t(i) * N + j] = s;
    }
  }
}

template <typename T>
void softmax_row(const T* x, T* y, int n) {
  T mx = x[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  T sum = T(0);
  for (int j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  for (int j = 0; j < n; ++j) y[j] /= sum;
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols) {
  for (int i = 0; i < rows; ++i) softmax_row(x + size_t(i) * cols, y + size_t(i) * cols, cols);
}

// Softmax per row restricted to valid columns; invalid columns get weight 0.
// Rows must have at least one valid column.
template <typename T>
void masked_softmax_row(const T* x, T* y, int n, const uint8_t* valid) {
  T mx = -std::numeric_limits<T>::infinity();
  for (int j = 0; j < n; ++j)
    if (valid[j]) mx = std::max(mx, x[j]);
  T sum = T(0);
  for (int j = 0; j < n; ++j) {
    if (valid[j]) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    } else {
      y[j] = T(0);
    }
  }
  for (int j = 0; j < n; ++j) y[j] /= sum;
}

template <typename T>
void masked_softmax_rows(const T* x, T* y, int rows, int cols, const uint8_t* valid) {
  for (int i = 0; i < rows; ++i)
    masked_softmax_row(x + size_t(i) * cols, y + size_t(i) * cols, cols, valid);
}

// y[r] = x[r] * gain / rms(x[r]); inv_rms (optional, length rows) keeps
// 1/rms for the backward pass.
template <typename T>
void rms_norm_rows(const T* x, const T* gain, T* y, int rows, int cols, T eps,
                   T* inv_rms = nullptr) {
  for (int i = 0; i < rows; ++i) {
    const T* xr = x + size_t(i) * cols;
    T ss = T(0);
    for (int j = 0; j < cols; ++j) ss += xr[j] * xr[j];
    T inv = T(1) / std::sqrt(ss / T(cols) + eps);
    if (inv_rms) inv_rms[i] = inv;
    T* yr = y + size_t(i) * cols;
    for (int j = 0; j < cols; ++j) yr[j] = xr[j] * inv * (gain ? gain[j] : T(1));
  }
}

}  // namespace serial

inline constexpr long long kParallelWorkThreshold = 16384;

template <typename T>
void matmul_nn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  const long long work = 1LL * M * K * N;
#pragma omp parallel for schedule(static) if (M > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(i) * K + k] * b[size_t(k) * N + j];
      c[size_t(i) * N + j] = s;
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  const long long work = 1LL * M * K * N;
#pragma omp parallel for schedule(static) if (M > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(i) * K + k] * b[size_t(j) * K + k];
      c[size_t(i) * N + j] = s;
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int M, int K, int N, bool acc = false) {
  const long long work = 1LL * M * K * N;
#pragma omp parallel for schedule(static) if (M > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T s = acc ? c[size_t(i) * N + j] : T(0);
      for (int k = 0; k < K; ++k) s += a[size_t(k) * M + i] * b[size_t(k) * N + j];
      c[size_t(i) * N + j] = s;
    }
  }
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols) {
  const long long work = 1LL * rows * cols;
#pragma omp parallel for schedule(static) if (rows > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < rows; ++i)
    serial::softmax_row(x + size_t(i) * cols, y + size_t(i) * cols, cols);
}

template <typename T>
void masked_softmax_rows(const T* x, T* y, int rows, int cols, const uint8_t* valid) {
  const long long work = 1LL * rows * cols;
#pragma omp parallel for schedule(static) if (rows > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < rows; ++i)
    serial::masked_softmax_row(x + size_t(i) * cols, y + size_t(i) * cols, cols, valid);
}

template <typename T>
void rms_norm_rows(const T* x, const T* gain, T* y, int rows, int cols, T eps,
                   T* inv_rms = nullptr) {
  const long long work = 1LL * rows * cols;
#pragma omp parallel for schedule(static) if (rows > 1 && work >= kParallelWorkThreshold)
  for (int i = 0; i < rows; ++i) {
    const T* xr = x + size_t(i) * cols;
    T ss = T(0);
    for (int j = 0; j < cols; ++j) ss += xr[j] * xr[j];
    T inv = T(1) / std::sqrt(ss / T(cols) + eps);
    if (inv_rms) inv_rms[i] = inv;
    T* yr = y + size_t(i) * cols;
    for (int j = 0; j < cols; ++j) yr[j] = xr[j] * inv * (gain ? gain[j] : T(1));
  }
}

}  // namespace asa::kernels
