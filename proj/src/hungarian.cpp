#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fairclust/kmeans.hpp"

namespace fairclust {

std::vector<int> hungarian_max(const std::vector<std::vector<double>>& weights) {
  const std::size_t n = weights.size();
  for (const auto& row : weights) {
    if (row.size() != n) throw std::invalid_argument("hungarian: weight matrix must be square");
  }
  if (n == 0) return {};

  // Shortest augmenting path with row/column potentials on cost = -weight.
  // Arrays are 1-based; index 0 is the virtual column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = static_cast<int>(j - 1);
  }
  return assignment;
}

MatchResult hungarian_match(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("hungarian_match: length mismatch");
  MatchResult res;
  if (pred.empty()) return res;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) throw std::invalid_argument("hungarian_match: negative label");
  }
  const auto kp = static_cast<std::size_t>(*std::max_element(pred.begin(), pred.end()) + 1);
  const auto kt = static_cast<std::size_t>(*std::max_element(truth.begin(), truth.end()) + 1);
  const std::size_t n = std::max(kp, kt);

  std::vector<std::vector<double>> table(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    table[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(truth[i])] += 1.0;
  }
  const auto assignment = hungarian_max(table);
  res.mapping.assign(kp, -1);
  for (std::size_t c = 0; c < kp; ++c) {
    const int t = assignment[c];
    if (t >= 0 && static_cast<std::size_t>(t) < kt) {
      res.mapping[c] = t;
      res.agreement += static_cast<std::size_t>(table[c][static_cast<std::size_t>(t)]);
    }
  }
  return res;
}

}  // namespace fairclust
