#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdagan {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
};

inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kComposedTolerance = 1e-3;

/// Central-difference checks, in double precision, of every differentiable
/// op plus the full generator objective of a small (16 x 16, width 4) model
/// for all three generator architectures.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed);

}  // namespace sdagan
