#include "sdagan/spectral.hpp"

#include <cmath>
#include <complex>
#include <random>

#include "fft_kernel.hpp"
#include "sdagan/grad_check.hpp"
#include "sdagan/ops.hpp"

namespace sdagan {
namespace {

void require_spectral_dims(std::size_t rows, std::size_t cols) {
  detail::require_power_of_two(rows, "grid height");
  detail::require_power_of_two(cols, "grid width");
}

template <typename T>
ComplexGrid<T> transform(const ComplexGrid<T>& input, bool inverse) {
  require_spectral_dims(input.rows, input.cols);
  const std::size_t n = input.rows * input.cols;
  if (input.real.size() != n || input.imag.size() != n) throw DimensionError("complex grid storage does not match its dims");
  std::vector<std::complex<T>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {input.real[i], input.imag[i]};
  detail::fft2d_inplace(buf.data(), input.rows, input.cols, inverse);
  ComplexGrid<T> out = ComplexGrid<T>::zeros(input.rows, input.cols);
  for (std::size_t i = 0; i < n; ++i) {
    out.real[i] = buf[i].real();
    out.imag[i] = buf[i].imag();
  }
  return out;
}

}  // namespace

template <typename T>
ComplexGrid<T> fft2d(const Grid<T>& input) {
  ComplexGrid<T> z{input.rows, input.cols, input.values, std::vector<T>(input.values.size(), T(0))};
  return transform(z, false);
}

template <typename T>
ComplexGrid<T> fft2d(const ComplexGrid<T>& input) {
  return transform(input, false);
}

template <typename T>
ComplexGrid<T> ifft2d(const ComplexGrid<T>& input) {
  return transform(input, true);
}

template <typename T>
Grid<T> amplitude(const ComplexGrid<T>& z) {
  Grid<T> out = Grid<T>::zeros(z.rows, z.cols);
  const T eps2 = T(ops::kAmplitudeEps) * T(ops::kAmplitudeEps);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::sqrt(z.real[i] * z.real[i] + z.imag[i] * z.imag[i] + eps2);
  }
  return out;
}

template <typename T>
Grid<T> phase(const ComplexGrid<T>& z) {
  Grid<T> out = Grid<T>::zeros(z.rows, z.cols);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::atan2(z.imag[i], z.real[i]);
  return out;
}

template <typename T>
ComplexGrid<T> polar_recombine(const Grid<T>& amp, const Grid<T>& phase) {
  if (amp.rows != phase.rows || amp.cols != phase.cols) {
    throw DimensionError("polar_recombine: amplitude and phase grids differ in size");
  }
  ComplexGrid<T> out = ComplexGrid<T>::zeros(amp.rows, amp.cols);
  for (std::size_t i = 0; i < amp.values.size(); ++i) {
    out.real[i] = amp.values[i] * std::cos(phase.values[i]);
    out.imag[i] = amp.values[i] * std::sin(phase.values[i]);
  }
  return out;
}

template <typename T>
SpectralMask<T> symmetrize_mask(const Grid<T>& mask) {
  require_spectral_dims(mask.rows, mask.cols);
  Grid<T> out = Grid<T>::zeros(mask.rows, mask.cols);
  for (std::size_t u = 0; u < mask.rows; ++u) {
    for (std::size_t v = 0; v < mask.cols; ++v) {
      const std::size_t mu = (mask.rows - u) % mask.rows;
      const std::size_t mv = (mask.cols - v) % mask.cols;
      out.at(u, v) = (mask.at(u, v) + mask.at(mu, mv)) / T(2);
    }
  }
  return {std::move(out)};
}

template <typename T>
Grid<T> center_spectrum(const Grid<T>& grid) {
  Grid<T> out = Grid<T>::zeros(grid.rows, grid.cols);
  for (std::size_t u = 0; u < grid.rows; ++u) {
    for (std::size_t v = 0; v < grid.cols; ++v) {
      out.at((u + grid.rows / 2) % grid.rows, (v + grid.cols / 2) % grid.cols) = grid.at(u, v);
    }
  }
  return out;
}

std::size_t spectral_radius(std::size_t u, std::size_t v, std::size_t rows, std::size_t cols) {
  // Signed frequency of an unshifted bin equals its offset from the centre
  // after the quadrant swap.
  const double du = u < (rows + 1) / 2 ? double(u) : double(u) - double(rows);
  const double dv = v < (cols + 1) / 2 ? double(v) : double(v) - double(cols);
  return static_cast<std::size_t>(std::lround(std::sqrt(du * du + dv * dv)));
}

SpectralProfile spectral_profile(const Grid<double>& image) {
  require_spectral_dims(image.rows, image.cols);
  const ComplexGrid<double> f = fft2d(image);
  Grid<double> power = Grid<double>::zeros(image.rows, image.cols);
  for (std::size_t i = 0; i < power.values.size(); ++i) power.values[i] = f.real[i] * f.real[i] + f.imag[i] * f.imag[i];
  const Grid<double> centred = center_spectrum(power);

  const std::size_t cu = image.rows / 2, cv = image.cols / 2;
  const double max_r = std::sqrt(double(cu * cu + cv * cv));
  SpectralProfile profile;
  profile.radial_energy.assign(static_cast<std::size_t>(std::lround(max_r)) + 1, 0.0);
  const double threshold = static_cast<double>(std::min(image.rows, image.cols)) / 4.0;
  double high = 0.0, total = 0.0;
  for (std::size_t u = 0; u < image.rows; ++u) {
    for (std::size_t v = 0; v < image.cols; ++v) {
      const double du = double(u) - double(cu), dv = double(v) - double(cv);
      const auto r = static_cast<std::size_t>(std::lround(std::sqrt(du * du + dv * dv)));
      const double e = centred.at(u, v);
      profile.radial_energy[r] += e;
      if (u == cu && v == cv) continue;
      total += e;
      if (static_cast<double>(r) > threshold) high += e;
    }
  }
  profile.high_freq_ratio = total > 0.0 ? high / total : 0.0;
  return profile;
}

double fft_adjoint_check(const Grid<double>& mask, const Grid<double>& x, double eps) {
  if (mask.rows != x.rows || mask.cols != x.cols) throw DimensionError("fft_adjoint_check: mask and input differ in size");
  const Tensor<double> m(Shape{1, 1, mask.rows, mask.cols}, mask.values);
  const Tensor<double> x0(Shape{1, 1, x.rows, x.cols}, x.values);
  auto f = [&m](const Tensor<double>& in) { return ops::sum(ops::square(ops::mask_complex(m, ops::fft2(in)))); };
  return grad_check(f, x0, eps);
}

double fft_adjoint_check(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid<double> mask = Grid<double>::zeros(size, size), x = Grid<double>::zeros(size, size);
  for (auto& v : mask.values) v = uni(rng);
  for (auto& v : x.values) v = normal(rng);
  return fft_adjoint_check(mask, x);
}

#define SDAGAN_INSTANTIATE_SPECTRAL(T)                                       \
  template ComplexGrid<T> fft2d<T>(const Grid<T>&);                         \
  template ComplexGrid<T> fft2d<T>(const ComplexGrid<T>&);                  \
  template ComplexGrid<T> ifft2d<T>(const ComplexGrid<T>&);                 \
  template Grid<T> amplitude<T>(const ComplexGrid<T>&);                     \
  template Grid<T> phase<T>(const ComplexGrid<T>&);                         \
  template ComplexGrid<T> polar_recombine<T>(const Grid<T>&, const Grid<T>&); \
  template SpectralMask<T> symmetrize_mask<T>(const Grid<T>&);              \
  template Grid<T> center_spectrum<T>(const Grid<T>&);

SDAGAN_INSTANTIATE_SPECTRAL(float)
SDAGAN_INSTANTIATE_SPECTRAL(double)

}  // namespace sdagan
