#pragma once

// Independent reference implementations used as test oracles. They are
// deliberately naive (direct sums, quadruple loops) and share no code with
// the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace sdagan::testing {

struct NaiveSpectrum {
  std::vector<double> re;
  std::vector<double> im;
};

/// O(N^4) forward DFT of a real rows x cols grid.
inline NaiveSpectrum naive_dft(const std::vector<double>& x, std::size_t rows, std::size_t cols) {
  NaiveSpectrum out{std::vector<double>(rows * cols, 0.0), std::vector<double>(rows * cols, 0.0)};
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < cols; ++v) {
      double re = 0, im = 0;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const double angle = -2.0 * std::numbers::pi *
                               (static_cast<double>(u * r) / static_cast<double>(rows) +
                                static_cast<double>(v * c) / static_cast<double>(cols));
          re += x[r * cols + c] * std::cos(angle);
          im += x[r * cols + c] * std::sin(angle);
        }
      out.re[u * cols + v] = re;
      out.im[u * cols + v] = im;
    }
  return out;
}

/// Direct cross-correlation, NCHW input, OIHW kernel, zero padding.
inline std::vector<double> naive_conv(const std::vector<double>& in, std::size_t n, std::size_t c, std::size_t h,
                                      std::size_t w, const std::vector<double>& kernel, std::size_t o, std::size_t k,
                                      const std::vector<double>& bias, std::size_t stride, std::size_t pad,
                                      std::size_t* out_h, std::size_t* out_w) {
  const std::size_t oh = (h + 2 * pad - k) / stride + 1;
  const std::size_t ow = (w + 2 * pad - k) / stride + 1;
  std::vector<double> out(n * o * oh * ow, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = bias[oc];
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(y * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(x * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                acc += in[((b * c + ic) * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] *
                       kernel[((oc * c + ic) * k + ky) * k + kx];
              }
          out[((b * o + oc) * oh + y) * ow + x] = acc;
        }
  if (out_h) *out_h = oh;
  if (out_w) *out_w = ow;
  return out;
}

/// Spatial-only attention composition sum_i lambda_i * A_i * C_i with C_n = x.
/// contents: (n-1) blocks of 3*H*W; att: n blocks of H*W; x: 3*H*W.
inline std::vector<double> spatial_only_composition(const std::vector<std::vector<double>>& contents,
                                                    const std::vector<double>& att, const std::vector<double>& x,
                                                    const std::vector<double>& lambda, std::size_t hw) {
  const std::size_t n = contents.size() + 1;
  std::vector<double> out(3 * hw, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& content = i + 1 == n ? x : contents[i];
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t p = 0; p < hw; ++p) out[ch * hw + p] += lambda[i] * att[i * hw + p] * content[ch * hw + p];
  }
  return out;
}

/// Scalar Adam, textbook form.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

/// Two-pass unbiased covariance of row samples.
inline std::vector<double> two_pass_covariance(const std::vector<std::vector<double>>& rows, std::vector<double>* mean) {
  const std::size_t d = rows.front().size(), count = rows.size();
  std::vector<double> mu(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mu[j] += r[j];
  for (double& m : mu) m /= static_cast<double>(count);
  std::vector<double> cov(d * d, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i * d + j] += (r[i] - mu[i]) * (r[j] - mu[j]);
  for (double& c : cov) c /= static_cast<double>(count - 1);
  if (mean) *mean = mu;
  return cov;
}

/// exp of the mean KL divergence between each row and the marginal.
inline double direct_inception_score(const std::vector<std::vector<double>>& p) {
  const std::size_t k = p.front().size();
  std::vector<double> marginal(k, 0.0);
  for (const auto& row : p)
    for (std::size_t j = 0; j < k; ++j) marginal[j] += row[j] / static_cast<double>(p.size());
  double kl = 0;
  for (const auto& row : p)
    for (std::size_t j = 0; j < k; ++j)
      if (row[j] > 0) kl += row[j] * std::log(row[j] / marginal[j]);
  return std::exp(kl / static_cast<double>(p.size()));
}

/// Radial energy and high-frequency share from a naive DFT, binned by the
/// rounded distance of each signed frequency pair from the origin.
struct NaiveProfile {
  std::vector<double> radial;
  double high_freq_ratio = 0;
};

inline NaiveProfile naive_profile(const std::vector<double>& x, std::size_t size) {
  const NaiveSpectrum f = naive_dft(x, size, size);
  const long half = static_cast<long>(size / 2);
  NaiveProfile out;
  out.radial.assign(static_cast<std::size_t>(std::lround(std::sqrt(2.0) * static_cast<double>(half))) + 1, 0.0);
  double high = 0, total = 0;
  for (std::size_t u = 0; u < size; ++u)
    for (std::size_t v = 0; v < size; ++v) {
      const long su = static_cast<long>(u) < half ? static_cast<long>(u) : static_cast<long>(u) - static_cast<long>(size);
      const long sv = static_cast<long>(v) < half ? static_cast<long>(v) : static_cast<long>(v) - static_cast<long>(size);
      const double e = f.re[u * size + v] * f.re[u * size + v] + f.im[u * size + v] * f.im[u * size + v];
      const long r = std::lround(std::hypot(static_cast<double>(su), static_cast<double>(sv)));
      out.radial[static_cast<std::size_t>(r)] += e;
      if (u == 0 && v == 0) continue;
      total += e;
      if (static_cast<double>(r) > static_cast<double>(size) / 4.0) high += e;
    }
  out.high_freq_ratio = total > 0 ? high / total : 0.0;
  return out;
}

/// Half-pixel-centre bilinear sample of one channel of interleaved RGB bytes.
inline std::uint8_t bilinear_oracle(const std::vector<std::uint8_t>& px, std::size_t w, std::size_t h,
                                    std::size_t target, std::size_t tx, std::size_t ty, std::size_t c) {
  auto clampi = [](double v, std::size_t hi) { return std::clamp(v, 0.0, static_cast<double>(hi - 1)); };
  const double sx = clampi((static_cast<double>(tx) + 0.5) * static_cast<double>(w) / static_cast<double>(target) - 0.5, w);
  const double sy = clampi((static_cast<double>(ty) + 0.5) * static_cast<double>(h) / static_cast<double>(target) - 0.5, h);
  const auto x0 = static_cast<std::size_t>(std::floor(sx)), y0 = static_cast<std::size_t>(std::floor(sy));
  const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
  auto at = [&](std::size_t x, std::size_t y) { return static_cast<double>(px[(y * w + x) * 3 + c]); };
  const double v = (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace sdagan::testing
