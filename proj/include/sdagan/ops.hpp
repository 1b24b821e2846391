#pragma once

#include <cstddef>
#include <vector>

#include "sdagan/tensor.hpp"

// Differentiable tensor operations. Every function records itself on the
// tape of its tracked inputs (if any) and is instantiated for float and
// double. Image tensors are NCHW; complex tensors carry a trailing dimension
// of 2 holding (real, imaginary).
namespace sdagan::ops {

enum class BinaryOp { add, subtract, multiply };
enum class Activation { relu, leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kInstanceNormEps = 1e-5;
/// Smoothing term of the spectral amplitude sqrt(re^2 + im^2 + eps^2).
inline constexpr double kAmplitudeEps = 1e-8;

/// `b` must have a's shape, be a single element, or have a's rank with
/// every dimension equal to a's or 1 (per-channel vectors, single-channel maps).
template <typename T>
Tensor<T> elementwise(BinaryOp op, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(BinaryOp::add, a, b); }
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(BinaryOp::subtract, a, b); }
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(BinaryOp::multiply, a, b); }

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value);

template <typename T>
Tensor<T> square(const Tensor<T>& a);
template <typename T>
Tensor<T> abs(const Tensor<T>& a);
/// log(1 + exp(a)), computed without overflow.
template <typename T>
Tensor<T> softplus(const Tensor<T>& a);

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& a);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// Cross-correlation with zero padding. input NCHW, kernel OIHW, bias O.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, std::size_t stride,
                 std::size_t pad);

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t factor);

/// Per-sample, per-channel standardisation over H*W followed by gain/bias.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& bias,
                        T eps = T(kInstanceNormEps));

/// Softmax over the channel axis at every (sample, pixel).
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& input);

/// Channels [start, start + count) of an NCHW (or NCHW2) tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t start, std::size_t count);

/// Concatenation along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs);

// ---- spectral ops over the last two (spatial) dims ----

/// Real [..., H, W] -> complex [..., H, W, 2]; unnormalised forward DFT.
template <typename T>
Tensor<T> fft2(const Tensor<T>& real);

/// Complex -> complex; forward (unnormalised) or inverse (1/(H*W)).
template <typename T>
Tensor<T> fft2_complex(const Tensor<T>& z, bool inverse);

template <typename T>
Tensor<T> complex_real(const Tensor<T>& z);

/// sqrt(re^2 + im^2 + kAmplitudeEps^2).
template <typename T>
Tensor<T> complex_abs(const Tensor<T>& z);

/// amp * (cos phase, sin phase). `phase` is a constant; only `amp` is differentiated.
template <typename T>
Tensor<T> polar(const Tensor<T>& amp, const Tensor<T>& phase);

/// mask [N, 1 or C, H, W] times complex z [N, C, H, W, 2].
template <typename T>
Tensor<T> mask_complex(const Tensor<T>& mask, const Tensor<T>& z);

/// out[u, v] = (m[u, v] + m[-u mod H, -v mod W]) / 2 over the last two dims.
template <typename T>
Tensor<T> symmetrize_spectral(const Tensor<T>& mask);

/// Phase atan2(im, re) of a complex tensor; never tracked.
template <typename T>
Tensor<T> complex_phase(const Tensor<T>& z);

}  // namespace sdagan::ops
