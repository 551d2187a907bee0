#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "equalizer/numerics/graph.hpp"

namespace equalizer::numerics {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
  /// Coordinates whose central differences at step and step/2 disagree by
  /// more than this (relative) are treated as non-smooth and skipped.
  double smoothness_tolerance = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
};

/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

/// Compares `analytic` against central differences (f(t+d) - f(t-d)) / 2d of
/// `loss` per coordinate. Coordinates at a kink (one-sided slopes disagree
/// in sign or magnitude beyond a factor of two, as for |x| at 0) or whose
/// difference quotient is not stable under halving the step are excluded
/// and counted. `params` is perturbed in place and restored.
GradCheckReport finite_difference_check(const std::function<double(const ParameterStore&)>& loss,
                                        ParameterStore& params, const Gradients& analytic,
                                        const GradCheckOptions& options = {});

}  // namespace equalizer::numerics
