#include "sdagan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sdagan/spectral.hpp"

namespace sdagan {
namespace {

void require_image(const Tensor<float>& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError(std::string(what) + ": expected a 3 x H x W image, got " + shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h != w || h < 4 || (h & (h - 1)) != 0) {
    throw ArgumentError(std::string(what) + ": image must be square with a power-of-two side >= 4, got " +
                        shape_to_string(image.shape()));
  }
}

SpectralProfile luminance_profile(const Tensor<float>& image) {
  Grid<double> g = Grid<double>::zeros(image.dim(1), image.dim(2));
  g.values = luminance(image);
  return spectral_profile(g);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.n != b.n) throw DimensionError("matmul: matrix sizes differ");
  Matrix c = Matrix::zeros(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t k = 0; k < a.n; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < a.n; ++j) c.at(i, j) += aik * b.at(k, j);
    }
  return c;
}

std::vector<double> luminance(const Tensor<float>& image) {
  require_image(image, "luminance");
  const std::size_t hw = image.dim(1) * image.dim(2);
  std::vector<double> y(hw);
  const auto d = image.data();
  for (std::size_t p = 0; p < hw; ++p) y[p] = 0.299 * d[p] + 0.587 * d[hw + p] + 0.114 * d[2 * hw + p];
  return y;
}

std::vector<double> feature_extract(const Tensor<float>& image) {
  require_image(image, "feature_extract");
  const std::size_t h = image.dim(1), w = image.dim(2), bh = h / 4, bw = w / 4;
  const auto d = image.data();

  std::vector<double> pooled;
  pooled.reserve(48);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t br = 0; br < 4; ++br)
      for (std::size_t bc = 0; bc < 4; ++bc) {
        double s = 0;
        for (std::size_t r = br * bh; r < (br + 1) * bh; ++r)
          for (std::size_t q = bc * bw; q < (bc + 1) * bw; ++q) s += d[(c * h + r) * w + q];
        pooled.push_back(s / static_cast<double>(bh * bw));
      }

  std::vector<double> out;
  out.reserve(kFeatureDim);
  for (std::size_t k = 0; k < kPooledFeatures; ++k) out.push_back(0.5 * (pooled[2 * k] + pooled[2 * k + 1]));

  const SpectralProfile prof = luminance_profile(image);
  const std::size_t R = prof.radial_energy.size();
  const double norm = static_cast<double>(h * w) * static_cast<double>(h * w);
  for (std::size_t b = 0; b < kSpectralBands; ++b) {
    const std::size_t lo = b * R / kSpectralBands, hi = (b + 1) * R / kSpectralBands;
    double e = 0;
    for (std::size_t r = lo; r < hi; ++r) e += prof.radial_energy[r];
    out.push_back(e / norm);
  }
  return out;
}

FeatureStats compute_stats(const std::vector<std::vector<double>>& features) {
  if (features.size() < 2) throw ArgumentError("compute_stats needs at least 2 samples, got " + std::to_string(features.size()));
  const std::size_t d = features[0].size();
  for (const auto& f : features) {
    if (f.size() != d) throw DimensionError("compute_stats: feature vectors differ in length");
  }
  FeatureStats s;
  s.count = features.size();
  s.mu.assign(d, 0.0);
  for (const auto& f : features)
    for (std::size_t i = 0; i < d; ++i) s.mu[i] += f[i];
  for (double& m : s.mu) m /= static_cast<double>(s.count);

  s.sigma = Matrix::zeros(d);
  for (const auto& f : features)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) s.sigma.at(i, j) += (f[i] - s.mu[i]) * (f[j] - s.mu[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      s.sigma.at(i, j) /= static_cast<double>(s.count - 1);
      s.sigma.at(j, i) = s.sigma.at(i, j);
    }
  return s;
}

EigenDecomposition symmetric_eigen(const Matrix& input) {
  const std::size_t n = input.n;
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  double scale = 0;
  for (double x : a.values) scale += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
    if (off <= 1e-30 * scale || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p, q).
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
  }
  EigenDecomposition e{std::vector<double>(n), v};
  for (std::size_t i = 0; i < n; ++i) e.values[i] = a.at(i, i);
  return e;
}

Matrix matrix_sqrt_psd(const Matrix& a) {
  double amax = 0;
  for (double x : a.values) amax = std::max(amax, std::abs(x));
  const double tol = 1e-6 * std::max(1.0, amax);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = i + 1; j < a.n; ++j) {
      if (std::abs(a.at(i, j) - a.at(j, i)) > tol) throw ArgumentError("matrix_sqrt_psd: matrix is not symmetric");
    }
  Matrix sym = a;
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = i + 1; j < a.n; ++j) sym.at(i, j) = sym.at(j, i) = 0.5 * (a.at(i, j) + a.at(j, i));

  const EigenDecomposition e = symmetric_eigen(sym);
  double lmax = 0;
  for (double l : e.values) lmax = std::max(lmax, std::abs(l));
  std::vector<double> root(a.n);
  for (std::size_t k = 0; k < a.n; ++k) {
    if (e.values[k] < -1e-8 * std::max(1.0, lmax)) {
      throw ArgumentError("matrix_sqrt_psd: matrix has a negative eigenvalue " + fmt(e.values[k]));
    }
    root[k] = std::sqrt(std::max(0.0, e.values[k]));
  }
  Matrix s = Matrix::zeros(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = i; j < a.n; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < a.n; ++k) acc += e.vectors.at(i, k) * root[k] * e.vectors.at(j, k);
      s.at(i, j) = s.at(j, i) = acc;
    }
  return s;
}

double fid(const FeatureStats& a, const FeatureStats& b) {
  const std::size_t d = a.mu.size();
  if (b.mu.size() != d || a.sigma.n != d || b.sigma.n != d) {
    throw DimensionError("fid: feature dimensions differ (" + std::to_string(d) + " vs " + std::to_string(b.mu.size()) + ")");
  }
  double mean_term = 0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mu[i] - b.mu[i]) * (a.mu[i] - b.mu[i]);

  // sqrt(Sa) Sb sqrt(Sa) is symmetric PSD and shares its trace root with Sa Sb.
  const Matrix ra = matrix_sqrt_psd(a.sigma);
  Matrix prod = matmul(matmul(ra, b.sigma), ra);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) prod.at(i, j) = prod.at(j, i) = 0.5 * (prod.at(i, j) + prod.at(j, i));
  const Matrix root = matrix_sqrt_psd(prod);

  double trace = 0;
  for (std::size_t i = 0; i < d; ++i) trace += a.sigma.at(i, i) + b.sigma.at(i, i) - 2.0 * root.at(i, i);
  return std::max(0.0, mean_term + trace);
}

double inception_score(const std::vector<std::vector<double>>& probs) {
  if (probs.empty()) throw ArgumentError("inception_score needs at least one row");
  const std::size_t k = probs[0].size();
  if (k == 0) throw ArgumentError("inception_score: rows are empty");
  std::vector<double> marginal(k, 0.0);
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (probs[n].size() != k) throw ArgumentError("inception_score: rows differ in length");
    double s = 0;
    for (double p : probs[n]) {
      if (!(p >= 0) || !std::isfinite(p)) throw ArgumentError("inception_score: row " + std::to_string(n) + " has a negative or non-finite entry");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) throw ArgumentError("inception_score: row " + std::to_string(n) + " sums to " + fmt(s));
    for (std::size_t j = 0; j < k; ++j) marginal[j] += probs[n][j];
  }
  for (double& m : marginal) m /= static_cast<double>(probs.size());
  double kl = 0;
  for (const auto& row : probs)
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] > 0) kl += row[j] * std::log(row[j] / marginal[j]);
    }
  return std::exp(kl / static_cast<double>(probs.size()));
}

std::vector<double> classify(const Tensor<float>& image) {
  require_image(image, "classify");
  const SpectralProfile prof = luminance_profile(image);
  const std::size_t R = prof.radial_energy.size();
  std::vector<double> p(kClassifierClasses, 0.0);
  double total = 0;
  for (std::size_t r = 1; r < R; ++r) {
    const std::size_t band = (r - 1) * kClassifierClasses / (R - 1);
    p[band] += prof.radial_energy[r];
    total += prof.radial_energy[r];
  }
  if (!(total > 0)) return std::vector<double>(kClassifierClasses, 1.0 / kClassifierClasses);
  for (double& x : p) x /= total;
  return p;
}

double high_freq_ratio(const Tensor<float>& image) {
  require_image(image, "high_freq_ratio");
  return luminance_profile(image).high_freq_ratio;
}

SpectraFillReport spectra_fill_report(const std::vector<Tensor<float>>& before, const std::vector<Tensor<float>>& after,
                                      const std::vector<Tensor<float>>& target) {
  auto ratios = [](const std::vector<Tensor<float>>& set, const char* name) {
    if (set.empty()) throw ArgumentError(std::string("spectra_fill_report: the ") + name + " set is empty");
    std::vector<double> r;
    for (const auto& img : set) {
      if (img.shape() != set[0].shape()) {
        throw DimensionError(std::string("spectra_fill_report: images of the ") + name + " set differ in size");
      }
      r.push_back(high_freq_ratio(img));
    }
    return r;
  };
  SpectraFillReport rep;
  rep.before = ratios(before, "before");
  rep.after = ratios(after, "after");
  rep.target = ratios(target, "target");
  rep.mean_before = mean_of(rep.before);
  rep.mean_after = mean_of(rep.after);
  rep.mean_target = mean_of(rep.target);
  rep.gap_before = std::abs(rep.mean_before - rep.mean_target);
  rep.gap_after = std::abs(rep.mean_after - rep.mean_target);
  rep.gap_reduction = rep.gap_before - rep.gap_after;
  return rep;
}

std::string SpectraFillReport::csv() const {
  std::string out = "set,index,high_freq_ratio,backend\n";
  auto rows = [&out](const char* name, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out += std::string(name) + "," + std::to_string(i) + "," + fmt(v[i]) + "," + kMetricsBackend + "\n";
  };
  rows("before", before);
  rows("after", after);
  rows("target", target);
  out += std::string("mean_before,,") + fmt(mean_before) + "," + kMetricsBackend + "\n";
  out += std::string("mean_after,,") + fmt(mean_after) + "," + kMetricsBackend + "\n";
  out += std::string("mean_target,,") + fmt(mean_target) + "," + kMetricsBackend + "\n";
  out += std::string("gap_reduction,,") + fmt(gap_reduction) + "," + kMetricsBackend + "\n";
  return out;
}

std::string SpectraFillReport::summary() const {
  return std::string("spectral filling [") + kMetricsBackend + "]\n" +
         "  mean high_freq_ratio before: " + fmt(mean_before) + "\n" +
         "  mean high_freq_ratio after:  " + fmt(mean_after) + "\n" +
         "  mean high_freq_ratio target: " + fmt(mean_target) + "\n" +
         "  gap before: " + fmt(gap_before) + "  gap after: " + fmt(gap_after) +
         "  reduction: " + fmt(gap_reduction) + "\n";
}

EvaluationReport evaluate_sets(const std::vector<Tensor<float>>& real, const std::vector<Tensor<float>>& fake) {
  if (real.size() < 2 || fake.size() < 2) throw ArgumentError("evaluation needs at least 2 real and 2 fake images");
  std::vector<std::vector<double>> fr, ff, probs;
  for (const auto& img : real) fr.push_back(feature_extract(img));
  for (const auto& img : fake) {
    ff.push_back(feature_extract(img));
    probs.push_back(classify(img));
  }
  EvaluationReport rep;
  rep.fid = fid(compute_stats(fr), compute_stats(ff));
  rep.inception_score = inception_score(probs);
  rep.real_count = real.size();
  rep.fake_count = fake.size();
  return rep;
}

std::string EvaluationReport::csv() const {
  return std::string("metric,value,backend\n") + "fid," + fmt(fid) + "," + kMetricsBackend + "\n" +
         "inception_score," + fmt(inception_score) + "," + kMetricsBackend + "\n";
}

std::string EvaluationReport::summary() const {
  return std::string("evaluation [backend: ") + kMetricsBackend + "; not comparable to Inception-v3 scores]\n" +
         "  real images: " + std::to_string(real_count) + "\n" + "  fake images: " + std::to_string(fake_count) + "\n" +
         "  FID: " + fmt(fid) + "\n" + "  IS:  " + fmt(inception_score) + "\n";
}

}  // namespace sdagan
