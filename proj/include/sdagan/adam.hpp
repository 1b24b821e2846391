#pragma once

#include <cstdint>
#include <vector>

#include "sdagan/params.hpp"

namespace sdagan {

/// Adam moments for every trainable entry of a ParamStore (empty buffers for
/// frozen entries), plus hyper-parameters and the step counter.
template <typename T>
struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static AdamState for_params(const ParamStore<T>& params, double lr = 2e-4, double beta1 = 0.5,
                              double beta2 = 0.999, double eps = 1e-8) {
    AdamState s{lr, beta1, beta2, eps, 0, {}, {}};
    for (const auto& e : params.entries()) {
      s.m.emplace_back(e.trainable ? e.value.numel() : 0, T(0));
      s.v.emplace_back(e.trainable ? e.value.numel() : 0, T(0));
    }
    return s;
  }
};

/// Gradient of every trainable entry of `bound` (a ParamStore bound to the
/// tape that produced `grads`); frozen entries get an empty tensor.
template <typename T>
std::vector<Tensor<T>> collect_gradients(const Gradients<T>& grads, const ParamStore<T>& bound) {
  std::vector<Tensor<T>> out;
  for (const auto& e : bound.entries()) out.push_back(e.trainable ? grads.of(e.value) : Tensor<T>());
  return out;
}

/// One bias-corrected Adam update of the trainable entries:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
void adam_step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state);

}  // namespace sdagan
