#include "fairclust/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fairclust/rng.hpp"

namespace fairclust {

GradCheckResult finite_diff_check(const ScalarFn& loss, const Vector& analytic, const Vector& params, double h,
                                  std::size_t sample, std::uint64_t seed) {
  if (h < 1e-6 || h > 1e-2) throw std::invalid_argument("finite_diff_check: h must lie in [1e-6, 1e-2]");
  if (analytic.size() != params.size()) throw ShapeError("finite_diff_check: gradient length mismatch");
  const auto n = static_cast<std::size_t>(params.size());
  if (sample > n) throw std::invalid_argument("finite_diff_check: sample exceeds parameter count");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (sample < n) {
    Rng rng = Rng(seed).substream("gradcheck");
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(sample);
    std::sort(idx.begin(), idx.end());
  }

  GradCheckResult res;
  Vector p = params;
  for (const auto i : idx) {
    const auto e = static_cast<Eigen::Index>(i);
    const double orig = p(e);
    p(e) = orig + h;
    const double up = loss(p);
    p(e) = orig - h;
    const double down = loss(p);
    p(e) = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic(e);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (res.worst_index < 0 || rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_index = e;
    }
    ++res.checked;
  }
  return res;
}

}  // namespace fairclust
