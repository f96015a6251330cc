#pragma once

#include <cstdint>
#include <functional>

#include "fairclust/tensor.hpp"

namespace fairclust {

using ScalarFn = std::function<double(const Vector&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
};

/// Compares `analytic` against central differences of `loss` at `params` on
/// `sample` coordinates drawn without replacement (all of them when sample
/// equals the parameter count). Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult finite_diff_check(const ScalarFn& loss, const Vector& analytic, const Vector& params, double h,
                                  std::size_t sample, std::uint64_t seed = 0);

}  // namespace fairclust
