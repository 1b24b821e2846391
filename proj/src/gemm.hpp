#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace sdagan::detail {

// C[M x N] (+)= A[M x K] * B[K x N], row-major, contiguous. The summation
// order over K is fixed, so results are bitwise reproducible.
template <typename T>
void gemm(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C, bool accumulate) {
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 32;
  std::size_t j = 0;
  for (; j + NR <= N; j += NR) {
    std::size_t i = 0;
    for (; i + MR <= M; i += MR) {
      T acc[MR][NR];
      for (std::size_t r = 0; r < MR; ++r)
        for (std::size_t c = 0; c < NR; ++c) acc[r][c] = accumulate ? C[(i + r) * N + j + c] : T(0);
      for (std::size_t k = 0; k < K; ++k) {
        const T* b = B + k * N + j;
        for (std::size_t r = 0; r < MR; ++r) {
          const T a = A[(i + r) * K + k];
          for (std::size_t c = 0; c < NR; ++c) acc[r][c] += a * b[c];
        }
      }
      for (std::size_t r = 0; r < MR; ++r)
        for (std::size_t c = 0; c < NR; ++c) C[(i + r) * N + j + c] = acc[r][c];
    }
    for (; i < M; ++i) {
      T acc[NR];
      for (std::size_t c = 0; c < NR; ++c) acc[c] = accumulate ? C[i * N + j + c] : T(0);
      for (std::size_t k = 0; k < K; ++k) {
        const T a = A[i * K + k];
        const T* b = B + k * N + j;
        for (std::size_t c = 0; c < NR; ++c) acc[c] += a * b[c];
      }
      for (std::size_t c = 0; c < NR; ++c) C[i * N + j + c] = acc[c];
    }
  }
  if (j < N) {
    const std::size_t rem = N - j;
    for (std::size_t i = 0; i < M; ++i) {
      T acc[NR];
      for (std::size_t c = 0; c < rem; ++c) acc[c] = accumulate ? C[i * N + j + c] : T(0);
      for (std::size_t k = 0; k < K; ++k) {
        const T a = A[i * K + k];
        const T* b = B + k * N + j;
        for (std::size_t c = 0; c < rem; ++c) acc[c] += a * b[c];
      }
      for (std::size_t c = 0; c < rem; ++c) C[i * N + j + c] = acc[c];
    }
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
  constexpr std::size_t B = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += B)
    for (std::size_t c0 = 0; c0 < cols; c0 += B)
      for (std::size_t r = r0; r < std::min(rows, r0 + B); ++r)
        for (std::size_t c = c0; c < std::min(cols, c0 + B); ++c) out[c * rows + r] = in[r * cols + c];
}

}  // namespace sdagan::detail
