#include "sdagan/losses.hpp"

#include "sdagan/ops.hpp"

namespace sdagan {
namespace {

template <typename T>
Tensor<T> l1(const Tensor<T>& target, const Tensor<T>& estimate, const char* what) {
  if (target.shape() != estimate.shape()) {
    throw DimensionError(std::string(what) + ": shapes " + shape_to_string(target.shape()) + " and " +
                         shape_to_string(estimate.shape()) + " differ");
  }
  return ops::mean(ops::abs(ops::sub(estimate, target)));
}

}  // namespace

template <typename T>
Tensor<T> adversarial_d(const Tensor<T>& logits_real, const Tensor<T>& logits_fake, GanMode mode) {
  if (mode == GanMode::least_squares) {
    return ops::add(ops::mean(ops::square(ops::add_scalar(logits_real, T(-1)))), ops::mean(ops::square(logits_fake)));
  }
  return ops::add(ops::mean(ops::softplus(ops::scale(logits_real, T(-1)))), ops::mean(ops::softplus(logits_fake)));
}

template <typename T>
Tensor<T> adversarial_g(const Tensor<T>& logits_fake, GanMode mode, bool minimax) {
  if (mode == GanMode::least_squares) return ops::mean(ops::square(ops::add_scalar(logits_fake, T(-1))));
  if (minimax) return ops::scale(ops::mean(ops::softplus(logits_fake)), T(-1));
  return ops::mean(ops::softplus(ops::scale(logits_fake, T(-1))));
}

template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& hgx, const Tensor<T>& y, const Tensor<T>& ghy) {
  return ops::add(l1(x, hgx, "cycle_loss"), l1(y, ghy, "cycle_loss"));
}

template <typename T>
Tensor<T> identity_loss(const Tensor<T>& x, const Tensor<T>& hx, const Tensor<T>& y, const Tensor<T>& gy) {
  return ops::add(l1(x, hx, "identity_loss"), l1(y, gy, "identity_loss"));
}

template <typename T>
Tensor<T> total_generator_loss(const Tensor<T>& adv_xy, const Tensor<T>& adv_yx, const Tensor<T>& cyc,
                               const Tensor<T>& idt, const LossWeights& w) {
  if (w.w_cycle < 0 || w.w_identity < 0) throw ArgumentError("loss weights must be non-negative");
  Tensor<T> total = ops::add(adv_xy, adv_yx);
  total = ops::add(total, ops::scale(cyc, static_cast<T>(w.w_cycle)));
  return ops::add(total, ops::scale(idt, static_cast<T>(w.w_identity)));
}

#define SDAGAN_INSTANTIATE_LOSSES(T)                                                                         \
  template Tensor<T> adversarial_d<T>(const Tensor<T>&, const Tensor<T>&, GanMode);                         \
  template Tensor<T> adversarial_g<T>(const Tensor<T>&, GanMode, bool);                                     \
  template Tensor<T> cycle_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> identity_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> total_generator_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                             const Tensor<T>&, const LossWeights&);

SDAGAN_INSTANTIATE_LOSSES(float)
SDAGAN_INSTANTIATE_LOSSES(double)

}  // namespace sdagan
