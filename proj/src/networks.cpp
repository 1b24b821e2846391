#include "sdagan/networks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fft_kernel.hpp"
#include "sdagan/ops.hpp"

namespace sdagan {

std::string_view arch_name(GeneratorArch arch) {
  switch (arch) {
    case GeneratorArch::direct_spectrum_a: return "a-direct";
    case GeneratorArch::phase_recombined_a: return "a-phase";
    case GeneratorArch::independent_amplitude_b: return "b";
  }
  return "?";
}

GeneratorArch parse_arch(std::string_view name) {
  if (name == "a-direct") return GeneratorArch::direct_spectrum_a;
  if (name == "a-phase") return GeneratorArch::phase_recombined_a;
  if (name == "b") return GeneratorArch::independent_amplitude_b;
  throw ArgumentError("unknown generator architecture '" + std::string(name) + "' (expected a-direct, a-phase or b)");
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor<float> normal(Shape shape, double mean = 0.0, double std = kInitStd) {
    std::normal_distribution<double> dist(mean, std);
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) x = static_cast<float>(dist(rng_));
    return Tensor<float>(std::move(shape), std::move(v));
  }

  void conv(ParamStore<float>& store, const std::string& name, std::size_t in, std::size_t out, std::size_t k) {
    store.add(name + ".weight", normal({out, in, k, k}));
    store.add(name + ".bias", Tensor<float>::zeros({out}));
  }

  void norm(ParamStore<float>& store, const std::string& name, std::size_t channels) {
    store.add(name + ".norm.gain", Tensor<float>::full({channels}, 1.0f));
    store.add(name + ".norm.bias", Tensor<float>::zeros({channels}));
  }

  void conv_norm(ParamStore<float>& store, const std::string& name, std::size_t in, std::size_t out, std::size_t k) {
    conv(store, name, in, out, k);
    norm(store, name, out);
  }

  void residual(ParamStore<float>& store, const std::string& name, std::size_t c) {
    conv_norm(store, name + ".a", c, c, 3);
    conv_norm(store, name + ".b", c, c, 3);
  }

 private:
  std::mt19937_64 rng_;
};

void add_branch(Initializer& init, ParamStore<float>& store, const std::string& prefix, std::size_t w,
                std::size_t out_channels) {
  init.residual(store, prefix + ".res0", 4 * w);
  init.residual(store, prefix + ".res1", 4 * w);
  init.conv_norm(store, prefix + ".up1", 4 * w, 2 * w, 3);
  init.conv_norm(store, prefix + ".up2", 2 * w, w, 3);
  init.conv(store, prefix + ".head", w, out_channels, 3);
}

// Sets the centre taps so that conv1(relu(conv0(p))) = relu(p) - relu(-p) = p
// on the first three input channels.
void make_fuser_near_identity(ParamStore<float>& store) {
  std::vector<float> w0 = store.get("fuser.conv0.weight").vec();
  std::vector<float> w1 = store.get("fuser.conv1.weight").vec();
  const std::size_t in0 = 6, taps = 9, centre = 4;
  for (std::size_t c = 0; c < 3; ++c) {
    w0[(c * in0 + c) * taps + centre] = 1.0f;
    w0[((c + 3) * in0 + c) * taps + centre] = -1.0f;
    w1[(c * kFuserWidth + c) * taps + centre] = 1.0f;
    w1[(c * kFuserWidth + c + 3) * taps + centre] = -1.0f;
  }
  store.set("fuser.conv0.weight", Tensor<float>({kFuserWidth, in0, 3, 3}, std::move(w0)));
  store.set("fuser.conv1.weight", Tensor<float>({3, kFuserWidth, 3, 3}, std::move(w1)));
}

template <typename T>
using Store = ParamStore<T>;

template <typename T>
Tensor<T> conv(const Store<T>& p, const std::string& name, const Tensor<T>& x, std::size_t stride, std::size_t pad) {
  return ops::conv2d(x, p.get(name + ".weight"), p.get(name + ".bias"), stride, pad);
}

template <typename T>
Tensor<T> norm(const Store<T>& p, const std::string& name, const Tensor<T>& x) {
  return ops::instance_norm(x, p.get(name + ".norm.gain"), p.get(name + ".norm.bias"));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return ops::activation(ops::Activation::relu, x);
}

template <typename T>
Tensor<T> leaky(const Tensor<T>& x) {
  return ops::activation(ops::Activation::leaky_relu, x);
}

template <typename T>
Tensor<T> residual(const Store<T>& p, const std::string& name, const Tensor<T>& x) {
  Tensor<T> h = relu(norm(p, name + ".a", conv(p, name + ".a", x, 1, 1)));
  h = norm(p, name + ".b", conv(p, name + ".b", h, 1, 1));
  return ops::add(x, h);
}

template <typename T>
Tensor<T> branch(const Store<T>& p, const std::string& prefix, const Tensor<T>& latent) {
  Tensor<T> h = residual(p, prefix + ".res1", residual(p, prefix + ".res0", latent));
  h = relu(norm(p, prefix + ".up1", conv(p, prefix + ".up1", ops::upsample_nearest(h, 2), 1, 1)));
  h = relu(norm(p, prefix + ".up2", conv(p, prefix + ".up2", ops::upsample_nearest(h, 2), 1, 1)));
  return conv(p, prefix + ".head", h, 1, 1);
}

template <typename T>
Tensor<T> as_batch(const Tensor<T>& x, const char* what) {
  if (x.rank() == 3) return ops::reshape(x, Shape{1, x.dim(0), x.dim(1), x.dim(2)});
  if (x.rank() == 4 && x.dim(0) == 1) return x;
  throw DimensionError(std::string(what) + ": expected 3 x H x W or 1 x 3 x H x W, got " + shape_to_string(x.shape()));
}

template <typename T>
Tensor<T> drop_batch(const Tensor<T>& x) {
  return ops::reshape(x, Shape(x.shape().begin() + 1, x.shape().end()));
}

// Element i of an n-vector as a 1 x 1 x 1 x 1 tensor.
template <typename T>
Tensor<T> pick(const Tensor<T>& vec, std::size_t i) {
  return ops::slice_channels(ops::reshape(vec, Shape{1, vec.numel(), 1, 1}), i, 1);
}

template <typename T>
double max_abs_imag(const Tensor<T>& z) {
  double m = 0.0;
  for (std::size_t i = 1; i < z.numel(); i += 2) m = std::max(m, static_cast<double>(std::abs(z[i])));
  return m;
}

}  // namespace

GeneratorParams<float> init_generator(std::uint64_t seed, const GeneratorConfig& config) {
  if (config.n < 2) throw ArgumentError("attention channel count n must be >= 2, got " + std::to_string(config.n));
  if (config.base_width < 4) {
    throw ArgumentError("base_width must be >= 4, got " + std::to_string(config.base_width));
  }
  const std::size_t w = config.base_width, n = config.n;
  Initializer init(seed);
  ParamStore<float> store;
  init.conv_norm(store, "enc.conv0", 3, w, 7);
  init.conv_norm(store, "enc.down1", w, 2 * w, 3);
  init.conv_norm(store, "enc.down2", 2 * w, 4 * w, 3);
  init.residual(store, "enc.res0", 4 * w);
  init.residual(store, "enc.res1", 4 * w);
  add_branch(init, store, "attn", w, n);
  add_branch(init, store, "content", w, 3 * (n - 1));
  add_branch(init, store, "spectral", w, n);
  if (config.arch == GeneratorArch::independent_amplitude_b) add_branch(init, store, "amplitude", w, 3 * (n - 1));
  init.conv(store, "fuser.conv0", 6, kFuserWidth, 3);
  init.conv(store, "fuser.conv1", kFuserWidth, 3, 3);
  make_fuser_near_identity(store);
  store.add("lambda_A", Tensor<float>::full({n}, static_cast<float>(kDefaultLambda)), config.learnable_lambdas);
  store.add("lambda_S", Tensor<float>::full({n}, static_cast<float>(kDefaultLambda)), config.learnable_lambdas);
  return {config, std::move(store)};
}

GeneratorParams<float> init_generator(std::uint64_t seed, std::size_t n, GeneratorArch arch, std::size_t base_width) {
  return init_generator(seed, GeneratorConfig{n, base_width, arch, false});
}

template <typename T>
Tensor<T> compose_outputs(const std::vector<Tensor<T>>& contents, const Tensor<T>& spatial_att,
                          const Tensor<T>& spectral_att, const std::vector<Tensor<T>>& amplitudes, const Tensor<T>& x,
                          const Tensor<T>& shared_phase, const Tensor<T>& lambda_a, const Tensor<T>& lambda_s,
                          GeneratorArch arch, double* imag_residual) {
  const std::size_t n = contents.size() + 1;
  if (spatial_att.rank() != 4 || spatial_att.dim(1) != n || spectral_att.shape() != spatial_att.shape()) {
    throw DimensionError("compose_outputs: attention maps must be 1 x " + std::to_string(n) + " x H x W");
  }
  if (lambda_a.numel() != n || lambda_s.numel() != n) {
    throw DimensionError("compose_outputs: lambda vectors must have " + std::to_string(n) + " entries");
  }
  const bool independent = arch == GeneratorArch::independent_amplitude_b;
  if (independent != !amplitudes.empty()) {
    throw ArgumentError(std::string("compose_outputs: architecture '") + std::string(arch_name(arch)) +
                        (independent ? "' requires" : "' does not take") + " generated amplitudes");
  }
  if (independent && amplitudes.size() != n - 1) {
    throw ArgumentError("compose_outputs: expected " + std::to_string(n - 1) + " amplitude layers");
  }
  const Tensor<T> phase = shared_phase.detach();
  double residual = 0.0;
  Tensor<T> total;
  for (std::size_t i = 0; i < n; ++i) {
    const bool background = i + 1 == n;
    const Tensor<T>& content = background ? x : contents[i];
    Tensor<T> spatial = ops::mul(ops::mul(content, ops::slice_channels(spatial_att, i, 1)), pick(lambda_a, i));

    Tensor<T> spectrum;
    switch (arch) {
      case GeneratorArch::direct_spectrum_a:
        spectrum = ops::fft2(content);
        break;
      case GeneratorArch::phase_recombined_a:
        spectrum = ops::polar(ops::complex_abs(ops::fft2(content)), phase);
        break;
      case GeneratorArch::independent_amplitude_b:
        spectrum = ops::polar(background ? ops::complex_abs(ops::fft2(x)) : amplitudes[i], phase);
        break;
    }
    const Tensor<T> filtered =
        ops::fft2_complex(ops::mask_complex(ops::slice_channels(spectral_att, i, 1), spectrum), true);
    residual = std::max(residual, max_abs_imag(filtered));
    Tensor<T> spectral = ops::mul(ops::complex_real(filtered), pick(lambda_s, i));

    Tensor<T> term = ops::add(spatial, spectral);
    total = i == 0 ? term : ops::add(total, term);
  }
  if (imag_residual) *imag_residual = residual;
  return total;
}

template <typename T>
GeneratorOutput<T> generator_forward(const GeneratorConfig& config, const ParamStore<T>& p, const Tensor<T>& x_in,
                                     ForwardOptions options) {
  const Tensor<T> x = as_batch(x_in, "generator_forward");
  if (x.dim(1) != 3) throw DimensionError("generator_forward: expected 3 input channels, got " + std::to_string(x.dim(1)));
  const std::size_t H = x.dim(2), W = x.dim(3);
  if (H != W) {
    throw ArgumentError("generator_forward: input must be square, got " + std::to_string(H) + " x " + std::to_string(W));
  }
  detail::require_power_of_two(H, "generator input size");
  if (H < 4) throw ArgumentError("generator_forward: input size must be at least 4");
  const std::size_t n = config.n;

  Tensor<T> h = relu(norm(p, "enc.conv0", conv(p, "enc.conv0", x, 1, 3)));
  h = relu(norm(p, "enc.down1", conv(p, "enc.down1", h, 2, 1)));
  h = relu(norm(p, "enc.down2", conv(p, "enc.down2", h, 2, 1)));
  const Tensor<T> latent = residual(p, "enc.res1", residual(p, "enc.res0", h));

  const Tensor<T> spatial_att = ops::softmax_channels(branch(p, "attn", latent));
  const Tensor<T> spectral_att = ops::symmetrize_spectral(ops::softmax_channels(branch(p, "spectral", latent)));
  const Tensor<T> contents_all = ops::activation(ops::Activation::tanh, branch(p, "content", latent));

  std::vector<Tensor<T>> contents, amplitudes;
  for (std::size_t i = 0; i + 1 < n; ++i) contents.push_back(ops::slice_channels(contents_all, 3 * i, 3));
  Tensor<T> amplitudes_all;
  if (config.arch == GeneratorArch::independent_amplitude_b) {
    // Amplitudes are produced in units of sqrt(H*W), the spectral scale of a
    // unit-variance image, and symmetrised so the inverse transform stays real.
    const T unit = static_cast<T>(std::sqrt(static_cast<double>(H * W)));
    amplitudes_all = ops::symmetrize_spectral(
        ops::add_scalar(ops::scale(relu(branch(p, "amplitude", latent)), unit), static_cast<T>(ops::kAmplitudeEps)));
    for (std::size_t i = 0; i + 1 < n; ++i) amplitudes.push_back(ops::slice_channels(amplitudes_all, 3 * i, 3));
  }

  Tensor<T> shared_phase;
  if (options.shared_phase) {
    if (options.shared_phase->size() != 3 * H * W) {
      throw DimensionError("generator_forward: phase override has " + std::to_string(options.shared_phase->size()) +
                           " values, expected " + std::to_string(3 * H * W));
    }
    shared_phase = Tensor<T>(Shape{1, 3, H, W}, std::vector<T>(options.shared_phase->begin(), options.shared_phase->end()));
  } else {
    shared_phase = ops::complex_phase(ops::fft2(x.detach()));
  }
  GeneratorOutput<T> out;
  const Tensor<T> pre = compose_outputs(contents, spatial_att, spectral_att, amplitudes, x, shared_phase,
                                        p.get("lambda_A"), p.get("lambda_S"), config.arch, &out.imag_residual);
  Tensor<T> image = pre;
  if (!options.bypass_fuser) {
    Tensor<T> f = relu(conv(p, "fuser.conv0", ops::concat_channels(std::vector<Tensor<T>>{pre, x}), 1, 1));
    image = ops::activation(ops::Activation::tanh, conv(p, "fuser.conv1", f, 1, 1));
  }
  out.image = drop_batch(image);
  out.pre_fuser = drop_batch(pre);
  out.spatial_attention = drop_batch(spatial_att);
  out.spectral_attention = drop_batch(spectral_att);
  out.contents = ops::reshape(contents_all, Shape{n - 1, 3, H, W});
  if (amplitudes_all.numel() > 0) out.amplitudes = ops::reshape(amplitudes_all, Shape{n - 1, 3, H, W});
  out.shared_phase = drop_batch(shared_phase);
  return out;
}

DiscriminatorParams<float> init_discriminator(std::uint64_t seed, std::size_t base_width) {
  if (base_width < 4) throw ArgumentError("base_width must be >= 4, got " + std::to_string(base_width));
  const std::size_t w = base_width;
  Initializer init(seed);
  ParamStore<float> store;
  init.conv(store, "d.conv1", 3, w, 4);
  init.conv_norm(store, "d.conv2", w, 2 * w, 4);
  init.conv_norm(store, "d.conv3", 2 * w, 4 * w, 4);
  init.conv(store, "d.conv4", 4 * w, 8 * w, 4);
  init.conv(store, "d.out", 8 * w, 1, 4);
  return {base_width, std::move(store)};
}

template <typename T>
Tensor<T> discriminator_forward(const ParamStore<T>& p, const Tensor<T>& image) {
  const Tensor<T> x = as_batch(image, "discriminator_forward");
  Tensor<T> h = leaky(conv(p, "d.conv1", x, 2, 1));
  h = leaky(norm(p, "d.conv2", conv(p, "d.conv2", h, 2, 1)));
  h = leaky(norm(p, "d.conv3", conv(p, "d.conv3", h, 2, 1)));
  h = leaky(conv(p, "d.conv4", h, 1, 1));
  return drop_batch(conv(p, "d.out", h, 1, 1));
}

#define SDAGAN_INSTANTIATE_NETWORKS(T)                                                                          \
  template GeneratorOutput<T> generator_forward<T>(const GeneratorConfig&, const ParamStore<T>&, const Tensor<T>&, \
                                                   ForwardOptions);                                            \
  template Tensor<T> compose_outputs<T>(const std::vector<Tensor<T>>&, const Tensor<T>&, const Tensor<T>&,       \
                                        const std::vector<Tensor<T>>&, const Tensor<T>&, const Tensor<T>&,       \
                                        const Tensor<T>&, const Tensor<T>&, GeneratorArch, double*);             \
  template Tensor<T> discriminator_forward<T>(const ParamStore<T>&, const Tensor<T>&);

SDAGAN_INSTANTIATE_NETWORKS(float)
SDAGAN_INSTANTIATE_NETWORKS(double)

}  // namespace sdagan
