#include "sdagan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "fft_kernel.hpp"
#include "gemm.hpp"

namespace sdagan {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace sdagan

namespace sdagan::ops {
namespace {

template <typename T>
using Sink = GradSink<T>;

template <typename T>
using GradSpan = std::span<const T>;

void require_rank(const Shape& shape, std::size_t rank, const char* op) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_to_string(shape));
  }
}

// For each element of `a`, the flat index of the broadcast element of `b`.
std::vector<std::size_t> broadcast_map(const Shape& a, const Shape& b) {
  const std::size_t n = shape_numel(a);
  const std::size_t rank = a.size();
  std::vector<std::size_t> b_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t d = rank; d-- > 0;) {
    b_stride[d] = (b[d] == 1) ? 0 : stride;
    stride *= b[d];
  }
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      offset += b_stride[d];
      if (idx[d] < a[d]) break;
      offset -= b_stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  return map;
}

struct SpatialDims {
  std::size_t batch;
  std::size_t rows;
  std::size_t cols;
};

SpatialDims spatial_dims(const Shape& shape, std::size_t trailing, const char* op) {
  if (shape.size() < 2 + trailing) {
    throw DimensionError(std::string(op) + ": tensor of shape " + shape_to_string(shape) +
                         " has no spatial dimensions");
  }
  const std::size_t rows = shape[shape.size() - 2 - trailing];
  const std::size_t cols = shape[shape.size() - 1 - trailing];
  detail::require_power_of_two(rows, "spectral height");
  detail::require_power_of_two(cols, "spectral width");
  const std::size_t per = rows * cols * (trailing ? 2 : 1);
  return {shape_numel(shape) / per, rows, cols};
}

// Batched 2-D complex transform on interleaved (re, im) storage.
template <typename T>
void transform_batch(std::span<T> data, const SpatialDims& d, bool inverse) {
  auto* z = reinterpret_cast<std::complex<T>*>(data.data());
  for (std::size_t b = 0; b < d.batch; ++b) detail::fft2d_inplace(z + b * d.rows * d.cols, d.rows, d.cols, inverse);
}

}  // namespace

template <typename T>
Tensor<T> elementwise(BinaryOp op, const Tensor<T>& a, const Tensor<T>& b) {
  enum class Mode { same, scalar, broadcast };
  Mode mode;
  if (a.shape() == b.shape()) {
    mode = Mode::same;
  } else if (b.numel() == 1) {
    mode = Mode::scalar;
  } else {
    bool ok = a.rank() == b.rank();
    for (std::size_t d = 0; ok && d < a.rank(); ++d) ok = (b.dim(d) == a.dim(d) || b.dim(d) == 1);
    if (!ok) {
      throw DimensionError("elementwise: shape mismatch between " + shape_to_string(a.shape()) + " and " +
                           shape_to_string(b.shape()));
    }
    mode = Mode::broadcast;
  }
  std::vector<std::size_t> map;
  if (mode == Mode::broadcast) map = broadcast_map(a.shape(), b.shape());
  auto bi = [mode, &map](std::size_t i) -> std::size_t {
    return mode == Mode::same ? i : (mode == Mode::scalar ? 0 : map[i]);
  };

  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(a.numel());
  switch (op) {
    case BinaryOp::add:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[bi(i)];
      break;
    case BinaryOp::subtract:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[bi(i)];
      break;
    case BinaryOp::multiply:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[bi(i)];
      break;
  }
  static constexpr const char* names[] = {"add", "subtract", "multiply"};
  return Tape<T>::record(
      names[static_cast<int>(op)], Tensor<T>(a.shape(), std::move(out)), {&a, &b},
      [op, mode, map = std::move(map), a, b](GradSpan<T> g, Sink<T>& sink) {
        auto bi = [mode, &map](std::size_t i) -> std::size_t {
          return mode == Mode::same ? i : (mode == Mode::scalar ? 0 : map[i]);
        };
        const auto av = a.data();
        const auto bv = b.data();
        if (sink.wants(0)) {
          auto ga = sink.grad(0);
          if (op == BinaryOp::multiply) {
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[bi(i)];
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
          }
        }
        if (sink.wants(1)) {
          auto gb = sink.grad(1);
          const T sign = op == BinaryOp::subtract ? T(-1) : T(1);
          if (op == BinaryOp::multiply) {
            for (std::size_t i = 0; i < g.size(); ++i) gb[bi(i)] += g[i] * av[i];
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) gb[bi(i)] += sign * g[i];
          }
        }
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tape<T>::record("scale", Tensor<T>(a.shape(), std::move(out)), {&a},
                         [factor](GradSpan<T> g, Sink<T>& sink) {
                           auto ga = sink.grad(0);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
                         });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += value;
  return Tape<T>::record("add_scalar", Tensor<T>(a.shape(), std::move(out)), {&a},
                         [](GradSpan<T> g, Sink<T>& sink) {
                           auto ga = sink.grad(0);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                         });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * av[i];
  return Tape<T>::record("square", Tensor<T>(a.shape(), std::move(out)), {&a}, [a](GradSpan<T> g, Sink<T>& sink) {
    auto ga = sink.grad(0);
    const auto av = a.data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += T(2) * av[i] * g[i];
  });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(av[i]);
  return Tape<T>::record("abs", Tensor<T>(a.shape(), std::move(out)), {&a}, [a](GradSpan<T> g, Sink<T>& sink) {
    auto ga = sink.grad(0);
    const auto av = a.data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (av[i] > 0 ? g[i] : (av[i] < 0 ? -g[i] : T(0)));
  });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(av[i], T(0)) + std::log1p(std::exp(-std::abs(av[i])));
  return Tape<T>::record("softplus", Tensor<T>(a.shape(), std::move(out)), {&a}, [a](GradSpan<T> g, Sink<T>& sink) {
    auto ga = sink.grad(0);
    const auto av = a.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T s = av[i] >= 0 ? T(1) / (T(1) + std::exp(-av[i])) : std::exp(av[i]) / (T(1) + std::exp(av[i]));
      ga[i] += s * g[i];
    }
  });
}

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& a) {
  const auto av = a.data();
  std::vector<T> out(a.numel());
  const T slope = T(kLeakySlope);
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0 ? av[i] : T(0);
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0 ? av[i] : slope * av[i];
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] >= 0 ? T(1) / (T(1) + std::exp(-av[i])) : std::exp(av[i]) / (T(1) + std::exp(av[i]));
      }
      break;
  }
  Tensor<T> result(a.shape(), std::move(out));
  static constexpr const char* names[] = {"relu", "leaky_relu", "tanh", "sigmoid"};
  return Tape<T>::record(names[static_cast<int>(kind)], result, {&a},
                         [kind, a, y = result, slope](GradSpan<T> g, Sink<T>& sink) {
                           auto ga = sink.grad(0);
                           const auto av = a.data();
                           const auto yv = y.data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             T d;
                             switch (kind) {
                               case Activation::relu: d = av[i] > 0 ? T(1) : T(0); break;
                               case Activation::leaky_relu: d = av[i] > 0 ? T(1) : slope; break;
                               case Activation::tanh: d = T(1) - yv[i] * yv[i]; break;
                               default: d = yv[i] * (T(1) - yv[i]); break;
                             }
                             ga[i] += d * g[i];
                           }
                         });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = 0;
  for (T v : a.data()) total += v;
  return Tape<T>::record("sum", Tensor<T>::scalar(total), {&a}, [](GradSpan<T> g, Sink<T>& sink) {
    auto ga = sink.grad(0);
    for (auto& v : ga) v += g[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
  }
  return Tape<T>::record("reshape", Tensor<T>(std::move(shape), a.vec()), {&a}, [](GradSpan<T> g, Sink<T>& sink) {
    auto ga = sink.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw, stride, pad;
  std::size_t out_h, out_w;
  std::size_t k_size() const { return channels * kh * kw; }
  std::size_t p_size() const { return out_h * out_w; }
};

template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* cols) {
  const std::size_t P = g.p_size();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * P;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = in + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width)) ? T(0) : src[iw];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* out) {
  const std::size_t P = g.p_size();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * P;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
          T* dst = out + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          const T* src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, std::size_t stride,
                 std::size_t pad) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(kernel.shape(), 4, "conv2d kernel");
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t O = kernel.dim(0);
  if (kernel.dim(1) != C) {
    throw DimensionError("conv2d: input has " + std::to_string(C) + " channels but kernel " +
                         shape_to_string(kernel.shape()) + " expects " + std::to_string(kernel.dim(1)));
  }
  if (bias.numel() != O) {
    throw DimensionError("conv2d: bias " + shape_to_string(bias.shape()) + " does not match " + std::to_string(O) +
                         " output channels");
  }
  ConvGeometry geo{C, H, W, kernel.dim(2), kernel.dim(3), stride, pad, 0, 0};
  if (H + 2 * pad < geo.kh || W + 2 * pad < geo.kw) {
    throw DimensionError("conv2d: kernel " + shape_to_string(kernel.shape()) + " larger than padded input " +
                         shape_to_string(input.shape()));
  }
  geo.out_h = (H + 2 * pad - geo.kh) / stride + 1;
  geo.out_w = (W + 2 * pad - geo.kw) / stride + 1;
  const std::size_t K = geo.k_size(), P = geo.p_size();

  std::vector<T> out(N * O * P);
  std::vector<T> cols(K * P);
  const auto in = input.data();
  const auto bv = bias.data();
  for (std::size_t n = 0; n < N; ++n) {
    im2col(in.data() + n * C * H * W, geo, cols.data());
    T* dst = out.data() + n * O * P;
    for (std::size_t o = 0; o < O; ++o) std::fill(dst + o * P, dst + (o + 1) * P, bv[o]);
    detail::gemm(O, P, K, kernel.data().data(), cols.data(), dst, true);
  }
  return Tape<T>::record(
      "conv2d", Tensor<T>(Shape{N, O, geo.out_h, geo.out_w}, std::move(out)), {&input, &kernel, &bias},
      [input, kernel, geo, N, O](GradSpan<T> g, Sink<T>& sink) {
        const std::size_t K = geo.k_size(), P = geo.p_size();
        const std::size_t in_size = geo.channels * geo.height * geo.width;
        std::vector<T> cols(K * P), cols_t, kernel_t, dcols;
        if (sink.wants(0)) {
          kernel_t.resize(K * O);
          detail::transpose(O, K, kernel.data().data(), kernel_t.data());
          dcols.resize(K * P);
        }
        if (sink.wants(1)) cols_t.resize(P * K);
        for (std::size_t n = 0; n < N; ++n) {
          const T* gn = g.data() + n * O * P;
          if (sink.wants(1)) {
            im2col(input.data().data() + n * in_size, geo, cols.data());
            detail::transpose(K, P, cols.data(), cols_t.data());
            detail::gemm(O, K, P, gn, cols_t.data(), sink.grad(1).data(), true);
          }
          if (sink.wants(2)) {
            auto gb = sink.grad(2);
            for (std::size_t o = 0; o < O; ++o) {
              T s = 0;
              for (std::size_t p = 0; p < P; ++p) s += gn[o * P + p];
              gb[o] += s;
            }
          }
          if (sink.wants(0)) {
            detail::gemm(K, P, O, kernel_t.data(), gn, dcols.data(), false);
            col2im_add(dcols.data(), geo, sink.grad(0).data() + n * in_size);
          }
        }
      });
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t factor) {
  if (factor < 1) throw ArgumentError("upsample_nearest: factor must be >= 1, got " + std::to_string(factor));
  require_rank(input.shape(), 4, "upsample_nearest");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = H * factor, OW = W * factor;
  std::vector<T> out(N * C * OH * OW);
  const auto in = input.data();
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    for (std::size_t oh = 0; oh < OH; ++oh) {
      const T* src = in.data() + (nc * H + oh / factor) * W;
      T* dst = out.data() + (nc * OH + oh) * OW;
      for (std::size_t ow = 0; ow < OW; ++ow) dst[ow] = src[ow / factor];
    }
  }
  return Tape<T>::record("upsample_nearest", Tensor<T>(Shape{N, C, OH, OW}, std::move(out)), {&input},
                         [=](GradSpan<T> g, Sink<T>& sink) {
                           auto gi = sink.grad(0);
                           for (std::size_t nc = 0; nc < N * C; ++nc) {
                             for (std::size_t oh = 0; oh < OH; ++oh) {
                               T* dst = gi.data() + (nc * H + oh / factor) * W;
                               const T* src = g.data() + (nc * OH + oh) * OW;
                               for (std::size_t ow = 0; ow < OW; ++ow) dst[ow / factor] += src[ow];
                             }
                           }
                         });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (!(eps > 0)) throw ArgumentError("instance_norm: eps must be positive");
  require_rank(input.shape(), 4, "instance_norm");
  const std::size_t N = input.dim(0), C = input.dim(1), M = input.dim(2) * input.dim(3);
  if (gain.numel() != C || bias.numel() != C) {
    throw DimensionError("instance_norm: gain/bias must have " + std::to_string(C) + " entries");
  }
  const auto x = input.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<T> xhat(x.size()), inv_std(N * C), out(x.size());
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* xs = x.data() + nc * M;
    T mu = 0;
    for (std::size_t i = 0; i < M; ++i) mu += xs[i];
    mu /= static_cast<T>(M);
    T var = 0;
    for (std::size_t i = 0; i < M; ++i) var += (xs[i] - mu) * (xs[i] - mu);
    var /= static_cast<T>(M);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[nc] = inv;
    const std::size_t c = nc % C;
    for (std::size_t i = 0; i < M; ++i) {
      xhat[nc * M + i] = (xs[i] - mu) * inv;
      out[nc * M + i] = gv[c] * xhat[nc * M + i] + bv[c];
    }
  }
  return Tape<T>::record(
      "instance_norm", Tensor<T>(input.shape(), std::move(out)), {&input, &gain, &bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), gain, N, C, M](GradSpan<T> g, Sink<T>& sink) {
        const auto gv = gain.data();
        for (std::size_t nc = 0; nc < N * C; ++nc) {
          const std::size_t c = nc % C;
          const T* gs = g.data() + nc * M;
          const T* xh = xhat.data() + nc * M;
          T sum_g = 0, sum_gx = 0;
          for (std::size_t i = 0; i < M; ++i) {
            sum_g += gs[i];
            sum_gx += gs[i] * xh[i];
          }
          if (sink.wants(2)) sink.grad(2)[c] += sum_g;
          if (sink.wants(1)) sink.grad(1)[c] += sum_gx;
          if (sink.wants(0)) {
            auto gi = sink.grad(0);
            const T k = gv[c] * inv_std[nc] / static_cast<T>(M);
            const T m = static_cast<T>(M);
            for (std::size_t i = 0; i < M; ++i) gi[nc * M + i] += k * (m * gs[i] - sum_g - xh[i] * sum_gx);
          }
        }
      });
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& input) {
  require_rank(input.shape(), 4, "softmax_channels");
  const std::size_t N = input.dim(0), C = input.dim(1), M = input.dim(2) * input.dim(3);
  const auto x = input.data();
  std::vector<T> y(x.size());
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t base = n * C * M;
    for (std::size_t p = 0; p < M; ++p) {
      T mx = x[base + p];
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, x[base + c * M + p]);
      T total = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const T e = std::exp(x[base + c * M + p] - mx);
        y[base + c * M + p] = e;
        total += e;
      }
      for (std::size_t c = 0; c < C; ++c) y[base + c * M + p] /= total;
    }
  }
  Tensor<T> result(input.shape(), std::move(y));
  return Tape<T>::record("softmax_channels", result, {&input}, [result, N, C, M](GradSpan<T> g, Sink<T>& sink) {
    auto gi = sink.grad(0);
    const auto yv = result.data();
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t base = n * C * M;
      for (std::size_t p = 0; p < M; ++p) {
        T dot = 0;
        for (std::size_t c = 0; c < C; ++c) dot += g[base + c * M + p] * yv[base + c * M + p];
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t i = base + c * M + p;
          gi[i] += yv[i] * (g[i] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t start, std::size_t count) {
  if (input.rank() < 2) throw DimensionError("slice_channels: tensor needs a channel axis");
  const std::size_t N = input.dim(0), C = input.dim(1);
  if (count == 0 || start + count > C) {
    throw DimensionError("slice_channels: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + std::to_string(C) + " channels");
  }
  const std::size_t inner = input.numel() / (N * C);
  Shape shape = input.shape();
  shape[1] = count;
  std::vector<T> out(N * count * inner);
  const auto in = input.data();
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(in.data() + (n * C + start) * inner, count * inner, out.data() + n * count * inner);
  }
  return Tape<T>::record("slice_channels", Tensor<T>(std::move(shape), std::move(out)), {&input},
                         [=](GradSpan<T> g, Sink<T>& sink) {
                           auto gi = sink.grad(0);
                           for (std::size_t n = 0; n < N; ++n) {
                             T* dst = gi.data() + (n * C + start) * inner;
                             const T* src = g.data() + n * count * inner;
                             for (std::size_t i = 0; i < count * inner; ++i) dst[i] += src[i];
                           }
                         });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs) {
  if (inputs.empty()) throw ArgumentError("concat_channels: no inputs");
  const Tensor<T>& first = inputs.front();
  if (first.rank() < 2) throw DimensionError("concat_channels: tensors need a channel axis");
  const std::size_t N = first.dim(0);
  const std::size_t inner = first.numel() / (N * first.dim(1));
  std::size_t total_c = 0;
  for (const auto& t : inputs) {
    Shape a = t.shape(), b = first.shape();
    if (a.size() != b.size()) throw DimensionError("concat_channels: rank mismatch");
    a[1] = b[1] = 0;
    if (a != b) {
      throw DimensionError("concat_channels: incompatible shapes " + shape_to_string(first.shape()) + " and " +
                           shape_to_string(t.shape()));
    }
    total_c += t.dim(1);
  }
  // The tape records a fixed number of inputs per node, so longer lists are
  // concatenated pairwise.
  if (inputs.size() == 1) return reshape(first, first.shape());
  if (inputs.size() > 2) {
    Tensor<T> acc = concat_channels(std::vector<Tensor<T>>{inputs[0], inputs[1]});
    for (std::size_t k = 2; k < inputs.size(); ++k) acc = concat_channels(std::vector<Tensor<T>>{acc, inputs[k]});
    return acc;
  }
  Shape shape = first.shape();
  shape[1] = total_c;
  std::vector<T> out(N * total_c * inner);
  std::size_t offset = 0;
  for (const auto& t : inputs) {
    const std::size_t c = t.dim(1);
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(t.data().data() + n * c * inner, c * inner, out.data() + (n * total_c + offset) * inner);
    }
    offset += c;
  }
  Tensor<T> result(std::move(shape), std::move(out));
  const std::size_t c0 = inputs[0].dim(1), c1 = inputs[1].dim(1);
  return Tape<T>::record("concat_channels", std::move(result), {&inputs[0], &inputs[1]},
                         [=](GradSpan<T> g, Sink<T>& sink) {
                           for (std::size_t k = 0; k < 2; ++k) {
                             if (!sink.wants(k)) continue;
                             auto gk = sink.grad(k);
                             const std::size_t c = k == 0 ? c0 : c1;
                             const std::size_t off = k == 0 ? 0 : c0;
                             for (std::size_t n = 0; n < N; ++n) {
                               const T* src = g.data() + (n * (c0 + c1) + off) * inner;
                               T* dst = gk.data() + n * c * inner;
                               for (std::size_t i = 0; i < c * inner; ++i) dst[i] += src[i];
                             }
                           }
                         });
}

template <typename T>
Tensor<T> fft2(const Tensor<T>& real) {
  const SpatialDims d = spatial_dims(real.shape(), 0, "fft2");
  std::vector<T> out(real.numel() * 2, T(0));
  const auto x = real.data();
  for (std::size_t i = 0; i < x.size(); ++i) out[2 * i] = x[i];
  transform_batch<T>(out, d, false);
  Shape shape = real.shape();
  shape.push_back(2);
  return Tape<T>::record("fft2", Tensor<T>(std::move(shape), std::move(out)), {&real},
                         [d](GradSpan<T> g, Sink<T>& sink) {
                           // Adjoint of the unnormalised DFT: H*W times the inverse transform.
                           std::vector<T> buf(g.begin(), g.end());
                           transform_batch<T>(buf, d, true);
                           const T hw = static_cast<T>(d.rows * d.cols);
                           auto gi = sink.grad(0);
                           for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += hw * buf[2 * i];
                         });
}

template <typename T>
Tensor<T> fft2_complex(const Tensor<T>& z, bool inverse) {
  if (z.rank() < 3 || z.shape().back() != 2) {
    throw DimensionError("fft2_complex: expected [..., H, W, 2], got " + shape_to_string(z.shape()));
  }
  const SpatialDims d = spatial_dims(z.shape(), 1, "fft2_complex");
  std::vector<T> out(z.data().begin(), z.data().end());
  transform_batch<T>(out, d, inverse);
  return Tape<T>::record(inverse ? "ifft2" : "fft2_complex", Tensor<T>(z.shape(), std::move(out)), {&z},
                         [d, inverse](GradSpan<T> g, Sink<T>& sink) {
                           std::vector<T> buf(g.begin(), g.end());
                           // forward adjoint = H*W * inverse; inverse adjoint = forward / (H*W).
                           transform_batch<T>(buf, d, !inverse);
                           const T hw = static_cast<T>(d.rows * d.cols);
                           const T factor = inverse ? T(1) / hw : hw;
                           auto gz = sink.grad(0);
                           for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += factor * buf[i];
                         });
}

template <typename T>
Tensor<T> complex_real(const Tensor<T>& z) {
  if (z.rank() < 1 || z.shape().back() != 2) throw DimensionError("complex_real: trailing dimension must be 2");
  const std::size_t n = z.numel() / 2;
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = z[2 * i];
  Shape shape(z.shape().begin(), z.shape().end() - 1);
  return Tape<T>::record("complex_real", Tensor<T>(std::move(shape), std::move(out)), {&z},
                         [](GradSpan<T> g, Sink<T>& sink) {
                           auto gz = sink.grad(0);
                           for (std::size_t i = 0; i < g.size(); ++i) gz[2 * i] += g[i];
                         });
}

template <typename T>
Tensor<T> complex_abs(const Tensor<T>& z) {
  if (z.rank() < 1 || z.shape().back() != 2) throw DimensionError("complex_abs: trailing dimension must be 2");
  const std::size_t n = z.numel() / 2;
  const T eps2 = T(kAmplitudeEps) * T(kAmplitudeEps);
  std::vector<T> out(n);
  const auto zv = z.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(zv[2 * i] * zv[2 * i] + zv[2 * i + 1] * zv[2 * i + 1] + eps2);
  Tensor<T> result(Shape(z.shape().begin(), z.shape().end() - 1), std::move(out));
  return Tape<T>::record("complex_abs", result, {&z}, [z, result](GradSpan<T> g, Sink<T>& sink) {
    auto gz = sink.grad(0);
    const auto zv = z.data();
    const auto av = result.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      gz[2 * i] += g[i] * zv[2 * i] / av[i];
      gz[2 * i + 1] += g[i] * zv[2 * i + 1] / av[i];
    }
  });
}

template <typename T>
Tensor<T> polar(const Tensor<T>& amp, const Tensor<T>& phase) {
  if (amp.shape() != phase.shape()) {
    throw DimensionError("polar: amplitude " + shape_to_string(amp.shape()) + " and phase " +
                         shape_to_string(phase.shape()) + " differ");
  }
  const std::size_t n = amp.numel();
  std::vector<T> cosv(n), sinv(n), out(2 * n);
  const auto av = amp.data();
  const auto pv = phase.data();
  for (std::size_t i = 0; i < n; ++i) {
    cosv[i] = std::cos(pv[i]);
    sinv[i] = std::sin(pv[i]);
    out[2 * i] = av[i] * cosv[i];
    out[2 * i + 1] = av[i] * sinv[i];
  }
  Shape shape = amp.shape();
  shape.push_back(2);
  return Tape<T>::record("polar", Tensor<T>(std::move(shape), std::move(out)), {&amp},
                         [cosv = std::move(cosv), sinv = std::move(sinv)](GradSpan<T> g, Sink<T>& sink) {
                           auto ga = sink.grad(0);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[2 * i] * cosv[i] + g[2 * i + 1] * sinv[i];
                         });
}

template <typename T>
Tensor<T> mask_complex(const Tensor<T>& mask, const Tensor<T>& z) {
  if (z.rank() < 3 || z.shape().back() != 2 || mask.rank() + 1 != z.rank()) {
    throw DimensionError("mask_complex: mask " + shape_to_string(mask.shape()) + " incompatible with complex " +
                         shape_to_string(z.shape()));
  }
  Shape zs(z.shape().begin(), z.shape().end() - 1);
  bool ok = true;
  for (std::size_t d = 0; d < zs.size(); ++d) ok = ok && (mask.dim(d) == zs[d] || (d == 1 && mask.dim(d) == 1));
  if (!ok) {
    throw DimensionError("mask_complex: mask " + shape_to_string(mask.shape()) + " incompatible with complex " +
                         shape_to_string(z.shape()));
  }
  std::vector<std::size_t> map = broadcast_map(zs, mask.shape());
  const auto mv = mask.data();
  const auto zv = z.data();
  std::vector<T> out(z.numel());
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[2 * i] = mv[map[i]] * zv[2 * i];
    out[2 * i + 1] = mv[map[i]] * zv[2 * i + 1];
  }
  return Tape<T>::record("mask_complex", Tensor<T>(z.shape(), std::move(out)), {&mask, &z},
                         [mask, z, map = std::move(map)](GradSpan<T> g, Sink<T>& sink) {
                           const auto mv = mask.data();
                           const auto zv = z.data();
                           if (sink.wants(0)) {
                             auto gm = sink.grad(0);
                             for (std::size_t i = 0; i < map.size(); ++i)
                               gm[map[i]] += g[2 * i] * zv[2 * i] + g[2 * i + 1] * zv[2 * i + 1];
                           }
                           if (sink.wants(1)) {
                             auto gz = sink.grad(1);
                             for (std::size_t i = 0; i < map.size(); ++i) {
                               gz[2 * i] += mv[map[i]] * g[2 * i];
                               gz[2 * i + 1] += mv[map[i]] * g[2 * i + 1];
                             }
                           }
                         });
}

namespace {

template <typename T>
void symmetrize_into(const T* in, T* out, const SpatialDims& d, bool accumulate) {
  const std::size_t plane = d.rows * d.cols;
  for (std::size_t b = 0; b < d.batch; ++b) {
    const T* src = in + b * plane;
    T* dst = out + b * plane;
    for (std::size_t u = 0; u < d.rows; ++u) {
      const std::size_t mu = (d.rows - u) % d.rows;
      for (std::size_t v = 0; v < d.cols; ++v) {
        const std::size_t mv = (d.cols - v) % d.cols;
        const T val = (src[u * d.cols + v] + src[mu * d.cols + mv]) / T(2);
        if (accumulate) {
          dst[u * d.cols + v] += val;
        } else {
          dst[u * d.cols + v] = val;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> symmetrize_spectral(const Tensor<T>& mask) {
  const SpatialDims d = spatial_dims(mask.shape(), 0, "symmetrize_spectral");
  std::vector<T> out(mask.numel());
  symmetrize_into(mask.data().data(), out.data(), d, false);
  return Tape<T>::record("symmetrize_spectral", Tensor<T>(mask.shape(), std::move(out)), {&mask},
                         [d](GradSpan<T> g, Sink<T>& sink) {
                           // The pair-averaging map is self-adjoint.
                           symmetrize_into(g.data(), sink.grad(0).data(), d, true);
                         });
}

template <typename T>
Tensor<T> complex_phase(const Tensor<T>& z) {
  if (z.rank() < 1 || z.shape().back() != 2) throw DimensionError("complex_phase: trailing dimension must be 2");
  const std::size_t n = z.numel() / 2;
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::atan2(z[2 * i + 1], z[2 * i]);
  return Tensor<T>(Shape(z.shape().begin(), z.shape().end() - 1), std::move(out));
}

#define SDAGAN_INSTANTIATE_OPS(T)                                                                          \
  template Tensor<T> elementwise<T>(BinaryOp, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                       \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                                  \
  template Tensor<T> square<T>(const Tensor<T>&);                                                         \
  template Tensor<T> abs<T>(const Tensor<T>&);                                                            \
  template Tensor<T> softplus<T>(const Tensor<T>&);                                                       \
  template Tensor<T> activation<T>(Activation, const Tensor<T>&);                                         \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                            \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                           \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                                 \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,         \
                               std::size_t);                                                              \
  template Tensor<T> upsample_nearest<T>(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);           \
  template Tensor<T> softmax_channels<T>(const Tensor<T>&);                                               \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, std::size_t, std::size_t);                       \
  template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);                                   \
  template Tensor<T> fft2<T>(const Tensor<T>&);                                                           \
  template Tensor<T> fft2_complex<T>(const Tensor<T>&, bool);                                             \
  template Tensor<T> complex_real<T>(const Tensor<T>&);                                                   \
  template Tensor<T> complex_abs<T>(const Tensor<T>&);                                                    \
  template Tensor<T> polar<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> mask_complex<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> symmetrize_spectral<T>(const Tensor<T>&);                                            \
  template Tensor<T> complex_phase<T>(const Tensor<T>&);

SDAGAN_INSTANTIATE_OPS(float)
SDAGAN_INSTANTIATE_OPS(double)

}  // namespace sdagan::ops
