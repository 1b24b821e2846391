#include "sdagan/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sdagan/grad_check.hpp"
#include "sdagan/networks.hpp"
#include "sdagan/ops.hpp"
#include "sdagan/spectral.hpp"
#include "sdagan/trainer.hpp"

namespace sdagan {
namespace {

using T = double;
using Tn = Tensor<double>;

constexpr double kEps = 1e-5;
// Networks contain relu/leaky/abs kinks and the smoothed modulus, whose
// curvature near a zero bin is ~1/|z|; see grad_check_multiscale.
constexpr double kNetworkSteps[] = {1e-5, 1e-6, 1e-7, 1e-8};

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  Tn normal(Shape shape, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = d(rng_);
    return Tn(std::move(shape), std::move(v));
  }

  // Values bounded away from zero so kinks (relu, abs) sit outside the probe.
  Tn away_from_zero(Shape shape) {
    Tn t = normal(std::move(shape));
    std::vector<double> v = t.vec();
    for (double& x : v) x += x >= 0 ? 0.1 : -0.1;
    return Tn(t.shape(), std::move(v));
  }

  Tn uniform(Shape shape, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = d(rng_);
    return Tn(std::move(shape), std::move(v));
  }

  // Random coordinates (all when n >= numel).
  std::vector<std::size_t> coords(std::size_t numel, std::size_t n) {
    std::vector<std::size_t> all(numel);
    for (std::size_t i = 0; i < numel; ++i) all[i] = i;
    if (n >= numel) return all;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng_() % (numel - i));
      std::swap(all[i], all[j]);
    }
    all.resize(n);
    return all;
  }

  // sum(w * g(x)) with a fixed random w, so every output element matters.
  void weighted(const std::string& name, const Tn& x, const std::function<Tn(const Tn&)>& g, bool network = false) {
    const Tn probe = g(x.detach());
    const Tn w = normal(probe.shape());
    check(name, x, [g, w](const Tn& in) { return ops::sum(ops::mul(g(in), w)); }, kOpTolerance, 0, network);
  }

  void check(const std::string& name, const Tn& x, const ScalarFunction& f, double tol = kOpTolerance,
             std::size_t max_coords = 0, bool network = false) {
    std::vector<std::size_t> c;
    if (max_coords) c = coords(x.numel(), max_coords);
    const double err = network ? grad_check_multiscale(f, x, kNetworkSteps, c) : grad_check(f, x, kEps, c);
    results.push_back({name, err, tol, err < tol});
  }

  std::vector<GradCheckResult> results;

 private:
  std::mt19937_64 rng_;
};

void elementwise_checks(Suite& s) {
  const Tn b = s.normal({2, 3, 4, 4});
  const Tn bc = s.normal({2, 3, 1, 1});
  s.weighted("add", s.normal({2, 3, 4, 4}), [b](const Tn& x) { return ops::add(x, b); });
  s.weighted("add (broadcast rhs)", s.normal({2, 3, 1, 1}), [b](const Tn& x) { return ops::add(b, x); });
  s.weighted("sub", s.normal({2, 3, 4, 4}), [b](const Tn& x) { return ops::sub(b, x); });
  s.weighted("mul", s.normal({2, 3, 4, 4}), [b](const Tn& x) { return ops::mul(x, b); });
  s.weighted("mul (broadcast)", s.normal({2, 3, 4, 4}), [bc](const Tn& x) { return ops::mul(x, bc); });
  s.weighted("mul (self)", s.normal({2, 3, 4, 4}), [](const Tn& x) { return ops::mul(x, x); });
  s.weighted("scale", s.normal({3, 5}), [](const Tn& x) { return ops::scale(x, 1.7); });
  s.weighted("add_scalar", s.normal({3, 5}), [](const Tn& x) { return ops::add_scalar(x, -0.3); });
  s.weighted("square", s.normal({3, 5}), [](const Tn& x) { return ops::square(x); });
  s.weighted("abs", s.away_from_zero({3, 5}), [](const Tn& x) { return ops::abs(x); });
  s.weighted("softplus", s.normal({3, 5}, 3.0), [](const Tn& x) { return ops::softplus(x); });
  s.weighted("relu", s.away_from_zero({3, 5}), [](const Tn& x) { return ops::activation(ops::Activation::relu, x); });
  s.weighted("leaky_relu", s.away_from_zero({3, 5}),
             [](const Tn& x) { return ops::activation(ops::Activation::leaky_relu, x); });
  s.weighted("tanh", s.normal({3, 5}), [](const Tn& x) { return ops::activation(ops::Activation::tanh, x); });
  s.weighted("sigmoid", s.normal({3, 5}), [](const Tn& x) { return ops::activation(ops::Activation::sigmoid, x); });
  s.check("mean", s.normal({3, 5}), [](const Tn& x) { return ops::mean(ops::square(x)); });
  s.weighted("reshape", s.normal({2, 6}), [](const Tn& x) { return ops::reshape(x, Shape{3, 4}); });
}

void image_checks(Suite& s) {
  const Tn kernel = s.normal({4, 3, 3, 3});
  const Tn bias = s.normal({4});
  const Tn input = s.normal({1, 3, 6, 6});
  s.weighted("conv2d (input, stride 1, pad 1)", input,
             [kernel, bias](const Tn& x) { return ops::conv2d(x, kernel, bias, 1, 1); });
  s.weighted("conv2d (input, stride 2, pad 1)", input,
             [kernel, bias](const Tn& x) { return ops::conv2d(x, kernel, bias, 2, 1); });
  s.weighted("conv2d (kernel)", kernel, [input, bias](const Tn& k) { return ops::conv2d(input, k, bias, 1, 1); });
  s.weighted("conv2d (bias)", bias, [input, kernel](const Tn& b) { return ops::conv2d(input, kernel, b, 2, 0); });
  const Tn k4 = s.normal({2, 3, 4, 4});
  s.weighted("conv2d (kernel 4, stride 2)", input,
             [k4](const Tn& x) { return ops::conv2d(x, k4, Tn::zeros({2}), 2, 1); });

  s.weighted("upsample_nearest", s.normal({1, 2, 3, 3}), [](const Tn& x) { return ops::upsample_nearest(x, 2); });

  const Tn gain = s.normal({3});
  const Tn nbias = s.normal({3});
  const Tn nin = s.normal({2, 3, 4, 4});
  s.weighted("instance_norm (input)", nin,
             [gain, nbias](const Tn& x) { return ops::instance_norm(x, gain, nbias); });
  s.weighted("instance_norm (gain)", gain, [nin, nbias](const Tn& g) { return ops::instance_norm(nin, g, nbias); });
  s.weighted("instance_norm (bias)", nbias, [nin, gain](const Tn& b) { return ops::instance_norm(nin, gain, b); });

  s.weighted("softmax_channels", s.normal({2, 4, 3, 3}), [](const Tn& x) { return ops::softmax_channels(x); });

  const Tn other = s.normal({1, 2, 3, 3});
  s.weighted("slice_channels", s.normal({1, 5, 3, 3}), [](const Tn& x) { return ops::slice_channels(x, 1, 3); });
  s.weighted("concat_channels", s.normal({1, 3, 3, 3}),
             [other](const Tn& x) { return ops::concat_channels(std::vector<Tn>{other, x, x}); });
}

void spectral_checks(Suite& s, std::uint64_t seed) {
  const double adj = fft_adjoint_check(8, seed);
  s.results.push_back({"fft adjoint: sum |mask * FFT(x)|^2", adj, kOpTolerance, adj < kOpTolerance});

  s.weighted("fft2", s.normal({1, 2, 8, 8}), [](const Tn& x) { return ops::fft2(x); });
  s.weighted("fft2_complex (forward)", s.normal({1, 2, 4, 8, 2}),
             [](const Tn& z) { return ops::fft2_complex(z, false); });
  s.weighted("fft2_complex (inverse)", s.normal({1, 2, 8, 4, 2}),
             [](const Tn& z) { return ops::fft2_complex(z, true); });
  s.weighted("complex_real", s.normal({1, 2, 4, 4, 2}), [](const Tn& z) { return ops::complex_real(z); });
  s.weighted("amplitude (complex_abs)", s.normal({1, 2, 8, 8, 2}), [](const Tn& z) { return ops::complex_abs(z); });
  const Tn phase = s.uniform({1, 3, 8, 8}, -3.1, 3.1);
  s.weighted("polar", s.uniform({1, 3, 8, 8}, 0.1, 2.0), [phase](const Tn& a) { return ops::polar(a, phase); });
  const Tn z = s.normal({1, 3, 8, 8, 2});
  const Tn mask = s.uniform({1, 1, 8, 8}, 0.0, 1.0);
  s.weighted("mask_complex (mask)", mask, [z](const Tn& m) { return ops::mask_complex(m, z); });
  s.weighted("mask_complex (spectrum)", z, [mask](const Tn& zz) { return ops::mask_complex(mask, zz); });
  s.weighted("symmetrize_spectral", s.normal({1, 2, 8, 8}), [](const Tn& m) { return ops::symmetrize_spectral(m); });
  // Amplitude/phase filtering path: Re iFFT(S * |FFT(x)| e^{i phase}).
  const Tn sp = s.uniform({1, 1, 8, 8}, 0.0, 1.0);
  const Tn xc = s.normal({1, 3, 8, 8});
  const Tn ph = ops::complex_phase(ops::fft2(xc));
  s.weighted("spectral filtering chain", xc, [sp, ph](const Tn& x) {
    const Tn amp = ops::complex_abs(ops::fft2(x));
    return ops::complex_real(ops::fft2_complex(ops::mask_complex(ops::symmetrize_spectral(sp), ops::polar(amp, ph)), true));
  });
}

void network_checks(Suite& s, std::uint64_t seed) {
  const auto disc = init_discriminator(seed, 4).weights.cast<T>();
  s.weighted("discriminator (input)", s.normal({3, 32, 32}),
             [disc](const Tn& x) { return discriminator_forward(disc, x); }, true);

  const GeneratorArch archs[] = {GeneratorArch::direct_spectrum_a, GeneratorArch::phase_recombined_a,
                                 GeneratorArch::independent_amplitude_b};
  const LossWeights weights;
  const auto d_a = init_discriminator(seed + 11, 4).weights.cast<T>();
  const auto d_b = init_discriminator(seed + 12, 4).weights.cast<T>();
  for (GeneratorArch arch : archs) {
    GeneratorConfig cfg;
    cfg.n = 3;
    cfg.base_width = 4;
    cfg.arch = arch;
    cfg.learnable_lambdas = true;
    const auto g = init_generator(seed + 1, cfg).weights.cast<T>();
    const auto h = init_generator(seed + 2, cfg).weights.cast<T>();
    const Tn x = s.uniform({3, 16, 16}, -1.0, 1.0);
    const Tn y = s.uniform({3, 16, 16}, -1.0, 1.0);
    const std::string tag = std::string(arch_name(arch));

    // Phases are constants of the objective: pin them at the base point.
    const PhasePins pins = generator_objective(cfg, g, cfg, h, d_a, d_b, x, y, weights, 2).phases;
    s.check("composed generator loss [" + tag + "] (input x)", x,
            [&, cfg](const Tn& xx) {
              return generator_objective(cfg, g, cfg, h, d_a, d_b, xx, y, weights, 2, &pins).total;
            },
            kComposedTolerance, 24, true);

    std::vector<std::string> names = {"enc.conv0.weight", "attn.head.weight", "content.head.weight",
                                      "spectral.head.weight", "fuser.conv1.weight", "lambda_A", "lambda_S"};
    if (arch == GeneratorArch::independent_amplitude_b) names.push_back("amplitude.head.weight");
    for (const auto& name : names) {
      s.check("composed generator loss [" + tag + "] (" + name + ")", g.get(name),
              [&, cfg, name](const Tn& p) {
                ParamStore<T> gp = g;
                gp.set(name, p);
                return generator_objective(cfg, gp, cfg, h, d_a, d_b, x, y, weights, 2, &pins).total;
              },
              kComposedTolerance, 12, true);
    }
  }
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  elementwise_checks(s);
  image_checks(s);
  spectral_checks(s, seed);
  network_checks(s, seed);
  return s.results;
}

}  // namespace sdagan
