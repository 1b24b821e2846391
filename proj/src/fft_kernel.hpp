#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "sdagan/errors.hpp"

namespace sdagan::detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void require_power_of_two(std::size_t n, const char* what) {
  if (!is_power_of_two(n)) {
    throw ArgumentError(std::string(what) + " must be a power of two, got " + std::to_string(n));
  }
}

// Radix-2 Cooley-Tukey plan for one transform length.
template <typename T>
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
    require_power_of_two(n, "FFT length");
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle))};
    }
  }

  std::size_t size() const { return n_; }

  // In-place, unnormalised. `inverse` conjugates the twiddles.
  void run(std::complex<T>* a, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
    }
    const T sign = inverse ? T(-1) : T(1);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const T wr = twiddle_[j * step].real();
          const T wi = sign * twiddle_[j * step].imag();
          const std::complex<T> u = a[i + j];
          const std::complex<T> x = a[i + j + half];
          const std::complex<T> v{x.real() * wr - x.imag() * wi, x.real() * wi + x.imag() * wr};
          a[i + j] = {u.real() + v.real(), u.imag() + v.imag()};
          a[i + j + half] = {u.real() - v.real(), u.imag() - v.imag()};
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<T>> twiddle_;
};

// 2-D transform of one H x W complex grid: row FFTs, then column FFTs.
// The inverse applies the 1/(H*W) factor.
template <typename T>
void fft2d_inplace(std::complex<T>* grid, std::size_t rows, std::size_t cols, bool inverse) {
  const FftPlan<T> row_plan(cols);
  const FftPlan<T> col_plan(rows);
  for (std::size_t r = 0; r < rows; ++r) row_plan.run(grid + r * cols, inverse);
  std::vector<std::complex<T>> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = grid[r * cols + c];
    col_plan.run(column.data(), inverse);
    for (std::size_t r = 0; r < rows; ++r) grid[r * cols + c] = column[r];
  }
  if (inverse) {
    const T norm = T(1) / static_cast<T>(rows * cols);
    for (std::size_t i = 0; i < rows * cols; ++i) grid[i] *= norm;
  }
}

}  // namespace sdagan::detail
