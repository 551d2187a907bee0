#include "equalizer/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "equalizer/error.hpp"

namespace equalizer::numerics {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(const std::function<double(const ParameterStore&)>& loss,
                                        ParameterStore& params, const Gradients& analytic,
                                        const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("finite_difference_check: step must be positive");
  if (analytic.size() != params.size()) throw DimensionError("finite_difference_check: one gradient per parameter");

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  const double d = options.step;
  const double f0 = loss(params);

  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params.value(p);
    if (analytic[p].shape() != value.shape()) throw DimensionError("finite_difference_check: gradient shape");

    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor && coords.size() > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }

    for (auto i : coords) {
      const double original = value[i];
      auto eval_at = [&](double offset) {
        value[i] = original + offset;
        const double v = loss(params);
        value[i] = original;
        return v;
      };
      const double fp = eval_at(d), fm = eval_at(-d);
      const double fp2 = eval_at(d / 2), fm2 = eval_at(-d / 2);

      const double central = (fp - fm) / (2 * d);
      const double central_half = (fp2 - fm2) / d;
      const double forward = (fp - f0) / d;
      const double backward = (f0 - fm) / d;

      const bool kink = std::abs(forward - backward) > 0.5 * std::max(std::abs(forward), std::abs(backward));
      const bool unstable = relative_error(central, central_half) > options.smoothness_tolerance;
      if (kink || unstable) {
        ++report.excluded;
        continue;
      }
      ++report.checked;
      const double err = relative_error(analytic[p][i], central);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_parameter = params.name(p);
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace equalizer::numerics
