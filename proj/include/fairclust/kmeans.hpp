#pragma once

#include <vector>

#include "fairclust/rng.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

/// D^2 seeding: first centre uniform, then each next centre drawn with
/// probability proportional to the squared distance to its nearest chosen
/// centre. Returns K x d.
Tensor kmeans_pp_init(const Tensor& z, std::size_t k, Rng& rng);

/// Nearest centre per row; ties go to the lowest centre index.
std::vector<int> nearest_centre(const Tensor& z, const Tensor& centres);

double distortion(const Tensor& z, const Tensor& centres, const std::vector<int>& assign);

struct LloydResult {
  Tensor centres;
  std::vector<int> assignments;
  std::size_t iterations = 0;
  std::size_t reseeds = 0;
  std::vector<double> distortion_history;  // after each assignment step
};

/// Alternating assignment / mean update. Stops when no centre moves by more
/// than `tol` (euclidean) or after `max_iters` updates. A cluster left empty
/// is reseeded at the point farthest from its assigned centre.
LloydResult lloyd(const Tensor& z, const Tensor& init, std::size_t max_iters = 20, double tol = 1e-4);

struct MatchResult {
  /// mapping[c] = truth label matched to predicted cluster c (-1 if unmatched).
  std::vector<int> mapping;
  std::size_t agreement = 0;
};

/// Cluster-to-label matching that maximises the number of agreeing points,
/// via the Hungarian algorithm on the zero-padded square contingency table.
MatchResult hungarian_match(const std::vector<int>& pred, const std::vector<int>& truth);

/// Maximum-weight perfect matching on a square weight matrix; returns
/// assignment[row] = column.
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& weights);

}  // namespace fairclust
