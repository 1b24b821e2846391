#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "sdagan/metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace sdagan {
namespace {

using testing::random_vector;

Tensor<float> random_image(std::size_t size, std::uint64_t seed) {
  const auto v = random_vector(3 * size * size, seed);
  return Tensor<float>({3, size, size}, std::vector<float>(v.begin(), v.end()));
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.n, m.n);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) e(i, j) = m.at(i, j);
  return e;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m = Matrix::zeros(static_cast<std::size_t>(e.rows()));
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) m.at(i, j) = e(i, j);
  return m;
}

Matrix random_psd(std::size_t n, std::uint64_t seed) {
  Eigen::MatrixXd b(n, n);
  auto v = random_vector(n * n, seed);
  for (std::size_t i = 0; i < n * n; ++i) b(i / n, i % n) = v[i];
  return from_eigen(b.transpose() * b);
}

FeatureStats random_stats(std::size_t d, std::uint64_t seed) {
  return {random_vector(d, seed), random_psd(d, seed + 1), 10};
}

// Frechet distance with Eigen's solver: tr(sqrt(Sa Sb)) from the eigenvalues
// of sqrt(Sa) Sb sqrt(Sa).
double eigen_fid(const FeatureStats& a, const FeatureStats& b) {
  const Eigen::MatrixXd sa = to_eigen(a.sigma), sb = to_eigen(b.sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(sa);
  const Eigen::MatrixXd root = ea.eigenvectors() * ea.eigenvalues().cwiseMax(0).cwiseSqrt().asDiagonal() *
                               ea.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(root * sb * root);
  double d = 0;
  for (std::size_t i = 0; i < a.mu.size(); ++i) d += (a.mu[i] - b.mu[i]) * (a.mu[i] - b.mu[i]);
  return d + sa.trace() + sb.trace() - 2.0 * em.eigenvalues().cwiseMax(0).cwiseSqrt().sum();
}

TEST(Features, LengthIs48) {
  for (std::size_t size : {4, 16, 64}) EXPECT_EQ(feature_extract(random_image(size, size)).size(), 48u);
  EXPECT_THROW(feature_extract(Tensor<float>::zeros({3, 12, 12})), ArgumentError);
}

TEST(Features, ConstantImageHasOnlyDcBand) {
  auto f = feature_extract(Tensor<float>::full({3, 32, 32}, 0.25f));
  EXPECT_GT(f[kPooledFeatures], 0.0);
  for (std::size_t b = 1; b < kSpectralBands; ++b) EXPECT_EQ(f[kPooledFeatures + b], 0.0);
  for (std::size_t k = 0; k < kPooledFeatures; ++k) EXPECT_FLOAT_EQ(f[k], 0.25f);
}

TEST(Features, MatchesDefinition) {
  const std::size_t size = 16, hw = size * size;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto img = random_image(size, seed + 5);
    const auto d = img.vec();
    std::vector<double> expected;
    std::vector<double> pooled;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t br = 0; br < 4; ++br)
        for (std::size_t bc = 0; bc < 4; ++bc) {
          double s = 0;
          for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t q = 0; q < 4; ++q) s += d[c * hw + (br * 4 + r) * size + bc * 4 + q];
          pooled.push_back(s / 16.0);
        }
    for (std::size_t k = 0; k < 24; ++k) expected.push_back((pooled[2 * k] + pooled[2 * k + 1]) / 2.0);
    std::vector<double> lum(hw);
    for (std::size_t p = 0; p < hw; ++p) lum[p] = 0.299 * d[p] + 0.587 * d[hw + p] + 0.114 * d[2 * hw + p];
    const auto profile = testing::naive_profile(lum, size);
    const std::size_t radii = profile.radial.size();
    for (std::size_t b = 0; b < 24; ++b) {
      double e = 0;
      for (std::size_t r = b * radii / 24; r < (b + 1) * radii / 24; ++r) e += profile.radial[r];
      expected.push_back(e / double(hw * hw));
    }
    const auto f = feature_extract(img);
    for (std::size_t i = 0; i < 48; ++i) EXPECT_NEAR(f[i], expected[i], 1e-6) << i;
  }
}

TEST(Stats, ClosedForms) {
  auto same = compute_stats({{1.0, 2.0}, {1.0, 2.0}});
  for (double v : same.sigma.values) EXPECT_EQ(v, 0.0);
  auto s = compute_stats({{0.0}, {2.0}});
  EXPECT_EQ(s.mu[0], 1.0);
  EXPECT_EQ(s.sigma.at(0, 0), 2.0);
  EXPECT_EQ(s.count, 2u);
  EXPECT_THROW(compute_stats({{1.0}}), ArgumentError);
}

TEST(Stats, MatchesTwoPassOracle) {
  std::vector<std::vector<double>> rows;
  for (std::uint64_t i = 0; i < 30; ++i) rows.push_back(random_vector(6, i + 100, -3.0, 5.0));
  std::vector<double> mean;
  auto cov = testing::two_pass_covariance(rows, &mean);
  auto s = compute_stats(rows);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s.mu[i], mean[i], 1e-8);
  for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(s.sigma.values[i], cov[i], 1e-8);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(s.sigma.at(i, j), s.sigma.at(j, i), 1e-9);
}

TEST(SymmetricEigen, MatchesReferenceSolver) {
  const Matrix a = random_psd(7, 3);
  auto mine = symmetric_eigen(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(a));
  auto values = mine.values;
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(values[i], ref.eigenvalues()[static_cast<long>(i)], 1e-9);
  // A v = l v for every returned pair.
  for (std::size_t k = 0; k < 7; ++k)
    for (std::size_t i = 0; i < 7; ++i) {
      double av = 0;
      for (std::size_t j = 0; j < 7; ++j) av += a.at(i, j) * mine.vectors.at(j, k);
      EXPECT_NEAR(av, mine.values[k] * mine.vectors.at(i, k), 1e-9);
    }
}

TEST(MatrixSqrt, ClosedForms) {
  auto id = matrix_sqrt_psd(Matrix::identity(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(id.at(i, j), i == j ? 1.0 : 0.0, 1e-12);
  Matrix d = Matrix::zeros(2);
  d.at(0, 0) = 4;
  d.at(1, 1) = 9;
  auto s = matrix_sqrt_psd(d);
  EXPECT_NEAR(s.at(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(s.at(1, 1), 3.0, 1e-12);
  EXPECT_NEAR(s.at(0, 1), 0.0, 1e-12);
}

TEST(MatrixSqrt, ReconstructsRandomPsd) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = random_psd(3 + seed * 5, seed + 20);
    const Matrix s = matrix_sqrt_psd(a);
    const Matrix ss = matmul(s, s);
    double amax = 0, err = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      amax = std::max(amax, std::abs(a.values[i]));
      err = std::max(err, std::abs(ss.values[i] - a.values[i]));
    }
    EXPECT_LT(err, 1e-6 * amax);
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t j = 0; j < s.n; ++j) EXPECT_NEAR(s.at(i, j), s.at(j, i), 1e-8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(s));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(MatrixSqrt, RejectsAsymmetricAndNegative) {
  Matrix a = Matrix::identity(2);
  a.at(0, 1) = 0.5;
  EXPECT_THROW(matrix_sqrt_psd(a), ArgumentError);
  Matrix neg = Matrix::identity(2);
  neg.at(1, 1) = -1.0;
  EXPECT_THROW(matrix_sqrt_psd(neg), ArgumentError);
  Matrix tiny = Matrix::identity(2);
  tiny.at(1, 1) = -1e-12;
  EXPECT_NO_THROW(matrix_sqrt_psd(tiny));
}

TEST(Fid, IdenticalStatsGiveZero) {
  const FeatureStats s = random_stats(5, 1);
  EXPECT_NEAR(fid(s, s), 0.0, 1e-9);
}

TEST(Fid, OneDimensionalGaussians) {
  FeatureStats a{{0.0}, Matrix::identity(1), 2}, b{{1.0}, Matrix::identity(1), 2};
  EXPECT_EQ(fid(a, b), 1.0);
  FeatureStats c{{3.0}, Matrix::identity(1), 2};
  c.sigma.at(0, 0) = 4.0;
  EXPECT_NEAR(fid(a, c), 9.0 + 1.0, 1e-12);
}

TEST(Fid, MatchesEigenOracleAndIsSymmetric) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureStats a = random_stats(3, seed * 10), b = random_stats(3, seed * 10 + 5);
    const double oracle = eigen_fid(a, b);
    EXPECT_LT(std::abs(fid(a, b) - oracle) / oracle, 1e-6);
    EXPECT_NEAR(fid(a, b), fid(b, a), 1e-9);
  }
  EXPECT_THROW(fid(random_stats(3, 1), random_stats(4, 1)), DimensionError);
}

TEST(InceptionScore, ClosedForms) {
  EXPECT_NEAR(inception_score(std::vector<std::vector<double>>(5, std::vector<double>(4, 0.25))), 1.0, 1e-12);
  std::vector<std::vector<double>> onehot(4, std::vector<double>(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) onehot[i][i] = 1.0;
  EXPECT_NEAR(inception_score(onehot), 4.0, 1e-12);
}

TEST(InceptionScore, MatchesDirectSumAndStaysInRange) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> p;
    for (int n = 0; n < 12; ++n) {
      auto row = random_vector(5, rng(), 0.0, 1.0);
      if (n % 3 == 0) row[n % 5] = 0.0;
      double s = 0;
      for (double v : row) s += v;
      for (double& v : row) v /= s;
      p.push_back(row);
    }
    const double is = inception_score(p);
    EXPECT_NEAR(is, testing::direct_inception_score(p), 1e-8);
    EXPECT_GE(is, 1.0 - 1e-12);
    EXPECT_LE(is, 5.0 + 1e-12);
  }
}

TEST(InceptionScore, RejectsInvalidRows) {
  EXPECT_THROW(inception_score({{0.5, 0.6}}), ArgumentError);
  EXPECT_THROW(inception_score({{1.5, -0.5}}), ArgumentError);
  EXPECT_THROW(inception_score({}), ArgumentError);
}

TEST(Classifier, ProbabilitiesAndConstantImage) {
  auto p = classify(random_image(32, 3));
  ASSERT_EQ(p.size(), kClassifierClasses);
  double s = 0;
  for (double v : p) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (double v : classify(Tensor<float>::full({3, 16, 16}, 0.1f))) EXPECT_EQ(v, 1.0 / 8.0);
}

TEST(SpectraFill, DegenerateCases) {
  auto stripes = testing::stripe_set(3, 32, 5), textures = testing::texture_set(3, 32, 5);
  EXPECT_EQ(spectra_fill_report(stripes, stripes, stripes).gap_reduction, 0.0);
  auto perfect = spectra_fill_report(stripes, textures, textures);
  EXPECT_EQ(perfect.gap_after, 0.0);
  EXPECT_EQ(perfect.gap_reduction, perfect.gap_before);
  EXPECT_THROW(spectra_fill_report({}, stripes, textures), ArgumentError);
}

TEST(SpectraFill, TexturesAreHigherFrequencyThanStripes) {
  auto r = spectra_fill_report(testing::stripe_set(4, 64, 1), testing::stripe_set(4, 64, 1), testing::texture_set(4, 64, 1));
  EXPECT_GT(r.mean_target, r.mean_before);
  EXPECT_EQ(r.before.size(), 4u);
  EXPECT_NE(r.summary().find(kMetricsBackend), std::string::npos);
  EXPECT_NE(r.csv().find("set,"), std::string::npos);
}

TEST(Evaluate, ReportLabelsBackend) {
  auto real = testing::texture_set(3, 32, 2), fake = testing::stripe_set(3, 32, 2);
  auto r = evaluate_sets(real, fake);
  EXPECT_GT(r.fid, 0.0);
  EXPECT_GE(r.inception_score, 1.0);
  EXPECT_EQ(r.real_count, 3u);
  EXPECT_NE(r.summary().find(kMetricsBackend), std::string::npos);
  EXPECT_NE(r.csv().find(kMetricsBackend), std::string::npos);
  EXPECT_NEAR(evaluate_sets(real, real).fid, 0.0, 1e-9);
  EXPECT_THROW(evaluate_sets({real[0]}, fake), ArgumentError);
}

}  // namespace
}  // namespace sdagan
