#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdagan/errors.hpp"

namespace sdagan {

/// Real H x W grid, row-major.
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  static Grid zeros(std::size_t rows, std::size_t cols) { return {rows, cols, std::vector<T>(rows * cols, T(0))}; }
  T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  T at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Frequency-domain image channel: paired real/imaginary grids.
template <typename T>
struct ComplexGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> real;
  std::vector<T> imag;

  static ComplexGrid zeros(std::size_t rows, std::size_t cols) {
    return {rows, cols, std::vector<T>(rows * cols, T(0)), std::vector<T>(rows * cols, T(0))};
  }
};

/// Nonnegative mask over frequency bins.
template <typename T>
struct SpectralMask {
  Grid<T> values;
};

/// Unnormalised forward 2-D DFT (radix-2, rows then columns).
/// Throws ArgumentError when a dimension is not a power of two.
template <typename T>
ComplexGrid<T> fft2d(const Grid<T>& input);

/// Complex-input forward transform.
template <typename T>
ComplexGrid<T> fft2d(const ComplexGrid<T>& input);

/// Inverse 2-D DFT including the 1/(H*W) factor.
template <typename T>
ComplexGrid<T> ifft2d(const ComplexGrid<T>& input);

/// Smoothed modulus sqrt(re^2 + im^2 + 1e-16).
template <typename T>
Grid<T> amplitude(const ComplexGrid<T>& z);

/// atan2(im, re); 0 at the origin.
template <typename T>
Grid<T> phase(const ComplexGrid<T>& z);

template <typename T>
ComplexGrid<T> polar_recombine(const Grid<T>& amp, const Grid<T>& phase);

/// Averages each bin with its conjugate partner so that filtering the
/// spectrum of a real image keeps the inverse transform real. Idempotent.
template <typename T>
SpectralMask<T> symmetrize_mask(const Grid<T>& mask);

/// Quadrant swap putting the DC bin at (H/2, W/2).
template <typename T>
Grid<T> center_spectrum(const Grid<T>& grid);

struct SpectralProfile {
  /// Sum of |F|^2 per integer radius from the centred DC bin.
  std::vector<double> radial_energy;
  /// Energy at radius > min(H, W)/4 over all non-DC energy; 0 for DC-only input.
  double high_freq_ratio = 0.0;
};

/// Integer radius of a bin in the centred spectrum (rounded to nearest).
std::size_t spectral_radius(std::size_t u, std::size_t v, std::size_t rows, std::size_t cols);

SpectralProfile spectral_profile(const Grid<double>& image);

/// Gradient of f(x) = sum |mask * FFT(x)|^2 through the tape (whose FFT
/// backward is an inverse transform) compared against central differences.
/// Returns the max relative error.
double fft_adjoint_check(const Grid<double>& mask, const Grid<double>& x, double eps = 1e-3);

/// Same with a random mask and input of the given size.
double fft_adjoint_check(std::size_t size = 8, std::uint64_t seed = 0);

}  // namespace sdagan
