#pragma once

#include "sdagan/tensor.hpp"

namespace sdagan {

enum class GanMode { cross_entropy, least_squares };

struct LossWeights {
  double w_cycle = 10.0;
  double w_identity = 5.0;
  GanMode gan_mode = GanMode::cross_entropy;
  /// Generator minimises log(1 - D(G(x))) instead of -log D(G(x)).
  bool minimax_generator = false;
};

/// Discriminator loss on raw logits. Callers compute the fake logits from
/// detached generator output, so only the discriminator receives gradient.
///   cross_entropy: mean(-log s(real)) + mean(-log(1 - s(fake)))
///   least_squares: mean((real - 1)^2) + mean(fake^2)
template <typename T>
Tensor<T> adversarial_d(const Tensor<T>& logits_real, const Tensor<T>& logits_fake,
                        GanMode mode = GanMode::cross_entropy);

/// Generator side: mean(-log s(fake)) or mean((fake - 1)^2); with `minimax`
/// (cross-entropy only) mean(log(1 - s(fake))).
template <typename T>
Tensor<T> adversarial_g(const Tensor<T>& logits_fake, GanMode mode = GanMode::cross_entropy, bool minimax = false);

/// mean|H(G(x)) - x| + mean|G(H(y)) - y|
template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& hgx, const Tensor<T>& y, const Tensor<T>& ghy);

/// mean|H(x) - x| + mean|G(y) - y|
template <typename T>
Tensor<T> identity_loss(const Tensor<T>& x, const Tensor<T>& hx, const Tensor<T>& y, const Tensor<T>& gy);

/// adv_xy + adv_yx + w_cycle * cyc + w_identity * idt
template <typename T>
Tensor<T> total_generator_loss(const Tensor<T>& adv_xy, const Tensor<T>& adv_yx, const Tensor<T>& cyc,
                               const Tensor<T>& idt, const LossWeights& w);

}  // namespace sdagan
