#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdagan/tensor.hpp"

namespace sdagan {

using ScalarFunction = std::function<Tensor<double>(const Tensor<double>&)>;

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Entries smaller than this fraction of the largest gradient entry are
/// compared against that floor instead of their own magnitude.
inline constexpr double kScaleFloor = 1e-4;

/// Compares the tape gradient of `f` at `x` with central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). `coords` restricts the check
/// to a subset of coordinates (all when empty). Returns the max over
/// coordinates of |a - n| / max(|a|, |n|, kScaleFloor * max|a|, 1e-8).
/// Throws EvaluationError when f produces a non-finite value.
double grad_check(const ScalarFunction& f, const Tensor<double>& x, double eps = 1e-3,
                  std::span<const std::size_t> coords = {});

/// Like grad_check, but each coordinate is compared at every step size in
/// `steps` and keeps its best agreement. For piecewise-smooth functions
/// (relu, abs): a probe that straddles a kink disagrees only at the larger
/// steps, while a wrong gradient disagrees at all of them.
double grad_check_multiscale(const ScalarFunction& f, const Tensor<double>& x, std::span<const double> steps,
                             std::span<const std::size_t> coords = {});

}  // namespace sdagan
