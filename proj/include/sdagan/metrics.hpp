#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdagan/tensor.hpp"

namespace sdagan {

/// Name of the feature/classifier backend, printed with every report so the
/// numbers are not mistaken for Inception-based scores.
inline constexpr const char* kMetricsBackend = "handcrafted-v1";

inline constexpr std::size_t kFeatureDim = 48;
inline constexpr std::size_t kPooledFeatures = 24;
inline constexpr std::size_t kSpectralBands = 24;
inline constexpr std::size_t kClassifierClasses = 8;

/// Dense square matrix, row-major.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> values;

  static Matrix zeros(std::size_t n) { return {n, std::vector<double>(n * n, 0.0)}; }
  static Matrix identity(std::size_t n) {
    Matrix m = zeros(n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

Matrix matmul(const Matrix& a, const Matrix& b);

struct FeatureStats {
  std::vector<double> mu;
  Matrix sigma;
  std::size_t count = 0;
};

/// Luminance 0.299 R + 0.587 G + 0.114 B of a 3 x H x W tensor.
std::vector<double> luminance(const Tensor<float>& image);

/// 48-dimensional descriptor of a 3 x H x W image (H == W, power of two, >= 4):
///   [0, 24)   the 4 x 4 mean pool of every channel, flattened as
///             [channel][row][col] (48 values), consecutive pairs averaged
///   [24, 48)  radial energy of the luminance spectrum divided by (HW)^2,
///             with the integer radii 0..R-1 split into 24 bands; band b
///             covers radii [floor(bR/24), floor((b+1)R/24))
std::vector<double> feature_extract(const Tensor<float>& image);

/// Mean and unbiased covariance; needs at least two samples of equal length.
FeatureStats compute_stats(const std::vector<std::vector<double>>& features);

struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;  // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi rotations on a symmetric matrix.
EigenDecomposition symmetric_eigen(const Matrix& a);

/// V diag(sqrt(max(l, 0))) V^T. Throws ArgumentError when `a` is asymmetric
/// beyond 1e-6 (scaled by max(1, max|a_ij|)) or has an eigenvalue below
/// -1e-8 max(1, max|l|); smaller negative eigenvalues are clamped to 0.
Matrix matrix_sqrt_psd(const Matrix& a);

/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 sqrt(sqrt(S_a) S_b sqrt(S_a))), >= 0.
double fid(const FeatureStats& a, const FeatureStats& b);

/// exp(mean_n KL(p_n || p_bar)); rows must be non-negative and sum to 1.
double inception_score(const std::vector<std::vector<double>>& probs);

/// Class probabilities of the handcrafted classifier: the share of non-DC
/// luminance energy in each of 8 equal-width radius bands (uniform for a
/// constant image).
std::vector<double> classify(const Tensor<float>& image);

/// high_freq_ratio of the luminance channel.
double high_freq_ratio(const Tensor<float>& image);

struct SpectraFillReport {
  std::vector<double> before;
  std::vector<double> after;
  std::vector<double> target;
  double mean_before = 0;
  double mean_after = 0;
  double mean_target = 0;
  double gap_before = 0;     // |mean_before - mean_target|
  double gap_after = 0;      // |mean_after - mean_target|
  double gap_reduction = 0;  // gap_before - gap_after; > 0 means the outputs moved towards the target

  std::string csv() const;
  std::string summary() const;
};

SpectraFillReport spectra_fill_report(const std::vector<Tensor<float>>& before, const std::vector<Tensor<float>>& after,
                                      const std::vector<Tensor<float>>& target);

struct EvaluationReport {
  double fid = 0;
  double inception_score = 0;
  std::size_t real_count = 0;
  std::size_t fake_count = 0;

  std::string csv() const;
  std::string summary() const;
};

/// FID between the two sets and IS of the fake set.
EvaluationReport evaluate_sets(const std::vector<Tensor<float>>& real, const std::vector<Tensor<float>>& fake);

}  // namespace sdagan
