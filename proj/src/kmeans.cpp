#include "fairclust/kmeans.hpp"

#include <limits>
#include <stdexcept>

namespace fairclust {

Tensor kmeans_pp_init(const Tensor& z, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(z.rows());
  if (k == 0) throw std::invalid_argument("kmeans++: K must be positive");
  if (k > n) {
    throw std::invalid_argument("kmeans++: K=" + std::to_string(k) + " exceeds the number of points " +
                                std::to_string(n));
  }
  Tensor centres(static_cast<Eigen::Index>(k), z.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto pick = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    centres.row(static_cast<Eigen::Index>(c)) = z.row(static_cast<Eigen::Index>(idx));
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(idx))).squaredNorm();
      if (d < d2[i]) d2[i] = d;
    }
  };

  pick(0, static_cast<std::size_t>(rng.uniform_index(n)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t idx = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        idx = i;
        if (acc > target) break;
      }
    } else {
      // Every point coincides with a centre: fall back to a uniform unchosen index.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      idx = free[static_cast<std::size_t>(rng.uniform_index(free.size()))];
    }
    pick(c, idx);
  }
  return centres;
}

std::vector<int> nearest_centre(const Tensor& z, const Tensor& centres) {
  const Tensor d = pairwise_sq_dist(z, centres);
  std::vector<int> out(static_cast<std::size_t>(z.rows()), 0);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < d.cols(); ++k) {
      if (d(i, k) < d(i, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double distortion(const Tensor& z, const Tensor& centres, const std::vector<int>& assign) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    s += (z.row(i) - centres.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return s;
}

LloydResult lloyd(const Tensor& z, const Tensor& init, std::size_t max_iters, double tol) {
  if (init.cols() != z.cols()) throw ShapeError("lloyd: centre dimension does not match data");
  LloydResult res;
  res.centres = init;
  res.assignments = nearest_centre(z, res.centres);
  res.distortion_history.push_back(distortion(z, res.centres, res.assignments));
  const Eigen::Index k = init.rows();

  for (std::size_t it = 0; it < max_iters; ++it) {
    Tensor sums = Tensor::Zero(k, z.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const int c = res.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += z.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    Tensor next = res.centres;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    // Reseed empty clusters at the point farthest from its centre.
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double d = (z.row(i) - next.row(res.assignments[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next.row(c) = z.row(far);
      res.assignments[static_cast<std::size_t>(far)] = static_cast<int>(c);
      ++res.reseeds;
    }
    const double shift = (next - res.centres).rowwise().norm().maxCoeff();
    res.centres = std::move(next);
    res.assignments = nearest_centre(z, res.centres);
    res.distortion_history.push_back(distortion(z, res.centres, res.assignments));
    ++res.iterations;
    if (shift < tol) break;
  }
  return res;
}

}  // namespace fairclust
