#include "sdagan/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sdagan {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

namespace {

double evaluate(const ScalarFunction& f, const Tensor<double>& x) {
  const Tensor<double> y = f(x);
  if (y.numel() != 1) throw ArgumentError("grad_check: function must return a scalar");
  const double v = y.item();
  if (!std::isfinite(v)) throw EvaluationError("grad_check: function value is not finite");
  return v;
}

}  // namespace

double grad_check_multiscale(const ScalarFunction& f, const Tensor<double>& x, std::span<const double> steps,
                             std::span<const std::size_t> coords) {
  if (steps.empty()) throw ArgumentError("grad_check: no step sizes given");
  for (double eps : steps) {
    if (!(eps > 0)) throw ArgumentError("grad_check: eps must be positive");
  }
  Tape<double> tape;
  const Tensor<double> var = tape.variable(x);
  const Tensor<double> y = f(var);
  if (y.numel() != 1) throw ArgumentError("grad_check: function must return a scalar");
  if (!std::isfinite(y.item())) throw EvaluationError("grad_check: function value is not finite");
  const Tensor<double> analytic = y.tracked() ? tape.backward(y).of(var) : Tensor<double>::zeros(x.shape());

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(x.numel());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = all;
  }
  // Entries far below the gradient's scale cannot be resolved by finite
  // differences (absolute precision ~1e-11), so they are measured against
  // 1e-4 of the largest entry.
  double scale = 0.0;
  for (double a : analytic.vec()) scale = std::max(scale, std::abs(a));
  const double floor = kScaleFloor * scale;
  double worst = 0.0;
  std::vector<double> probe(x.vec());
  for (std::size_t i : coords) {
    if (i >= x.numel()) throw ArgumentError("grad_check: coordinate out of range");
    const double orig = probe[i];
    double best = std::numeric_limits<double>::infinity();
    for (double eps : steps) {
      probe[i] = orig + eps;
      const double up = evaluate(f, Tensor<double>(x.shape(), probe));
      probe[i] = orig - eps;
      const double down = evaluate(f, Tensor<double>(x.shape(), probe));
      probe[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max({std::abs(analytic[i]), std::abs(numeric), floor, 1e-8});
      best = std::min(best, err);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double grad_check(const ScalarFunction& f, const Tensor<double>& x, double eps, std::span<const std::size_t> coords) {
  const double steps[] = {eps};
  return grad_check_multiscale(f, x, steps, coords);
}

}  // namespace sdagan
