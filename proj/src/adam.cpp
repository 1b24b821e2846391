#include "sdagan/adam.hpp"

#include <cmath>

namespace sdagan {

template <typename T>
void adam_step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || state.m.size() != entries.size()) {
    throw DimensionError("adam_step: gradient/state count does not match the parameter count");
  }
  if (!(state.lr > 0)) throw ArgumentError("adam_step: learning rate must be positive");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T lr = static_cast<T>(state.lr), eps = static_cast<T>(state.eps);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    if (!e.trainable) continue;
    const Tensor<T>& g = grads[k];
    if (g.shape() != e.value.shape() || state.m[k].size() != g.numel()) {
      throw DimensionError("adam_step: gradient for '" + e.name + "' has shape " + shape_to_string(g.shape()) +
                           ", parameter has " + shape_to_string(e.value.shape()));
    }
    std::vector<T> w = e.value.vec();
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto gv = g.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * gv[i];
      v[i] = b2 * v[i] + (T(1) - b2) * gv[i] * gv[i];
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    e.value = Tensor<T>(e.value.shape(), std::move(w));
  }
}

template void adam_step<float>(ParamStore<float>&, const std::vector<Tensor<float>>&, AdamState<float>&);
template void adam_step<double>(ParamStore<double>&, const std::vector<Tensor<double>>&, AdamState<double>&);

}  // namespace sdagan
