#pragma once

#include <cstddef>
#include <memory>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sdagan/params.hpp"
#include "sdagan/tensor.hpp"

namespace sdagan {

/// How the spectrum of each content layer is formed before spectral attention.
enum class GeneratorArch {
  /// Z = FFT(C)
  direct_spectrum_a,
  /// Z = |FFT(C)| recombined with the input's phase
  phase_recombined_a,
  /// Z = generated amplitude recombined with the input's phase (own decoder)
  independent_amplitude_b,
};

std::string_view arch_name(GeneratorArch arch);  // "a-direct", "a-phase", "b"
GeneratorArch parse_arch(std::string_view name);

struct GeneratorConfig {
  std::size_t n = 4;  // attention channels; the last one is the background
  std::size_t base_width = 16;
  GeneratorArch arch = GeneratorArch::independent_amplitude_b;
  bool learnable_lambdas = false;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

inline constexpr std::size_t kFuserWidth = 16;
inline constexpr double kInitStd = 0.02;
inline constexpr double kDefaultLambda = 0.5;

/// Layer table of the generator (w = base_width, c = 4w, k = kernel size):
///
///   encoder  conv k7 3->w, IN | conv k3 s2 w->2w, IN | conv k3 s2 2w->4w, IN |
///            2 residual blocks at c (each: conv k3, IN, conv k3, IN)
///   branch   2 residual blocks at c | up x2, conv k3 c->2w, IN |
///            up x2, conv k3 2w->w, IN | head conv k3 w->out
///            out = n (spatial attention), 3(n-1) (content), n (spectral
///            attention), 3(n-1) (amplitude, arch b only)
///   fuser    conv k3 6->16 | conv k3 16->3
///   lambdas  lambda_A, lambda_S, n each
///
/// Every conv has a bias; every IN has a gain and a bias.
template <typename T>
struct GeneratorParams {
  GeneratorConfig config;
  ParamStore<T> weights;

  template <typename U>
  GeneratorParams<U> cast() const {
    return {config, weights.template cast<U>()};
  }
};

template <typename T>
struct GeneratorOutput {
  Tensor<T> image;               // 3 x H x W
  Tensor<T> spatial_attention;   // n x H x W
  Tensor<T> spectral_attention;  // n x H x W, symmetrised
  Tensor<T> contents;            // (n-1) x 3 x H x W
  Tensor<T> amplitudes;          // (n-1) x 3 x H x W, arch b only (else empty)
  Tensor<T> pre_fuser;           // 3 x H x W
  Tensor<T> shared_phase;        // 3 x H x W, constant
  double imag_residual = 0.0;    // max |imag| over all inverse transforms
};

struct ForwardOptions {
  bool bypass_fuser = false;
  /// Use these 3 x H x W phase values instead of the phase of FFT(x). The
  /// phase is a constant either way; pinning it lets finite differences see
  /// the same function the tape differentiates.
  std::shared_ptr<const std::vector<double>> shared_phase;
};

GeneratorParams<float> init_generator(std::uint64_t seed, const GeneratorConfig& config);
GeneratorParams<float> init_generator(std::uint64_t seed, std::size_t n, GeneratorArch arch, std::size_t base_width);

/// x is 3 x H x W (or 1 x 3 x H x W) with H == W a power of two >= 4.
template <typename T>
GeneratorOutput<T> generator_forward(const GeneratorConfig& config, const ParamStore<T>& weights, const Tensor<T>& x,
                                     ForwardOptions options = {});

template <typename T>
GeneratorOutput<T> generator_forward(const GeneratorParams<T>& params, const Tensor<T>& x, ForwardOptions options = {}) {
  return generator_forward(params.config, params.weights, x, options);
}

/// Sum over i of lambda_A^i * C^i * A^i + lambda_S^i * Re(iFFT(S^i * Z^i)),
/// where C^n = x is the background content.
///
///   contents       n-1 tensors, 1 x 3 x H x W
///   spatial_att    1 x n x H x W
///   spectral_att   1 x n x H x W (already symmetrised)
///   amplitudes     n-1 tensors, 1 x 3 x H x W (arch b) or empty
///   x              1 x 3 x H x W
///   shared_phase   1 x 3 x H x W
///   lambda_a/_s    n entries
///
/// `imag_residual`, when given, receives the max |imag| of all inverse transforms.
template <typename T>
Tensor<T> compose_outputs(const std::vector<Tensor<T>>& contents, const Tensor<T>& spatial_att,
                          const Tensor<T>& spectral_att, const std::vector<Tensor<T>>& amplitudes, const Tensor<T>& x,
                          const Tensor<T>& shared_phase, const Tensor<T>& lambda_a, const Tensor<T>& lambda_s,
                          GeneratorArch arch, double* imag_residual = nullptr);

/// PatchGAN discriminator, kernel 4, padding 1:
///   conv 3->w s2, leaky | conv w->2w s2, IN, leaky | conv 2w->4w s2, IN, leaky |
///   conv 4w->8w s1, leaky | conv 8w->1 s1
/// A 64 x 64 input gives a 1 x 6 x 6 logit map.
template <typename T>
struct DiscriminatorParams {
  std::size_t base_width = 16;
  ParamStore<T> weights;

  template <typename U>
  DiscriminatorParams<U> cast() const {
    return {base_width, weights.template cast<U>()};
  }
};

DiscriminatorParams<float> init_discriminator(std::uint64_t seed, std::size_t base_width);

/// Raw logits, 1 x h x w.
template <typename T>
Tensor<T> discriminator_forward(const ParamStore<T>& weights, const Tensor<T>& image);

template <typename T>
Tensor<T> discriminator_forward(const DiscriminatorParams<T>& params, const Tensor<T>& image) {
  return discriminator_forward(params.weights, image);
}

}  // namespace sdagan
