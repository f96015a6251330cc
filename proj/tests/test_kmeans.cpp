#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "fairclust/kmeans.hpp"
#include "test_util.hpp"

namespace fairclust {
namespace {

using testing::random_tensor;

Tensor rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Tensor t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) t(i, j++) = v;
    ++i;
  }
  return t;
}

// Two blobs of 50 points each around (0,0) and (100,0).
Tensor two_blobs(Rng& rng) {
  Tensor z = random_tensor(100, 2, rng);
  z.bottomRows(50).col(0).array() += 100.0;
  return z;
}

TEST(KMeansPP, KEqualsNPicksEveryPoint) {
  Rng rng(1);
  const Tensor z = random_tensor(7, 3, rng);
  const Tensor c = kmeans_pp_init(z, 7, rng);
  EXPECT_DOUBLE_EQ(distortion(z, c, nearest_centre(z, c)), 0.0);
}

TEST(KMeansPP, DuplicatesYieldBothDistinctPoints) {
  const Tensor z = rows_of({{1, 1}, {1, 1}, {4, 0}, {4, 0}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Tensor c = kmeans_pp_init(z, 2, rng);
    EXPECT_NE(c.row(0), c.row(1)) << "seed " << seed;
  }
}

TEST(KMeansPP, SeparatedBlobsSeededInAtLeast95Of100Runs) {
  Rng data_rng(2);
  const Tensor z = two_blobs(data_rng);
  int both = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Tensor c = kmeans_pp_init(z, 2, rng);
    both += (c(0, 0) > 50.0) != (c(1, 0) > 50.0);
  }
  EXPECT_GE(both, 95);
}

TEST(KMeansPP, DeterministicAndRejectsTooManyCentres) {
  Rng data_rng(3);
  const Tensor z = random_tensor(20, 2, data_rng);
  Rng a(4), b(4);
  EXPECT_EQ(kmeans_pp_init(z, 3, a), kmeans_pp_init(z, 3, b));
  EXPECT_THROW(kmeans_pp_init(z, 21, a), std::invalid_argument);
}

TEST(Lloyd, HandIteratedOneDimensional) {
  const Tensor z = rows_of({{0}, {1}, {9}, {10}});
  const auto r = lloyd(z, rows_of({{0}, {10}}));
  EXPECT_DOUBLE_EQ(r.centres(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.centres(1, 0), 9.5);
  EXPECT_EQ(r.assignments, (std::vector<int>{0, 0, 1, 1}));
}

TEST(Lloyd, InitAtMeansConvergesInOneIteration) {
  Rng rng(5);
  const Tensor z = two_blobs(rng);
  Tensor means(2, 2);
  means.row(0) = z.topRows(50).colwise().mean();
  means.row(1) = z.bottomRows(50).colwise().mean();
  const auto r = lloyd(z, means);
  EXPECT_EQ(r.iterations, 1u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(r.assignments[i], i < 50 ? 0 : 1);
  EXPECT_TRUE(r.centres.isApprox(means, 1e-12));
}

TEST(Lloyd, ZeroIterationsReturnsInit) {
  Rng rng(6);
  const Tensor z = random_tensor(30, 2, rng);
  const Tensor init = z.topRows(3);
  const auto r = lloyd(z, init, 0);
  EXPECT_EQ(r.centres, init);
  EXPECT_EQ(r.assignments, nearest_centre(z, init));
  EXPECT_EQ(r.iterations, 0u);
}

TEST(Lloyd, DistortionNonIncreasingWithoutReseeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const Tensor z = random_tensor(60, 3, rng);
    const auto r = lloyd(z, kmeans_pp_init(z, 4, rng), 50, 0.0);
    if (r.reseeds > 0) continue;
    for (std::size_t i = 1; i < r.distortion_history.size(); ++i) {
      EXPECT_LE(r.distortion_history[i], r.distortion_history[i - 1] + 1e-12) << "seed " << seed;
    }
  }
}

TEST(Lloyd, EmptyClusterIsReseededAtFarthestPoint) {
  const Tensor z = rows_of({{0}, {1}, {2}, {50}});
  const auto r = lloyd(z, rows_of({{1}, {1000}}), 1);
  EXPECT_EQ(r.reseeds, 1u);
  EXPECT_DOUBLE_EQ(r.centres(1, 0), 50.0);
}

TEST(NearestCentre, TiesGoToLowestIndex) {
  const Tensor z = rows_of({{0, 0}});
  EXPECT_EQ(nearest_centre(z, rows_of({{1, 0}, {-1, 0}, {0, 1}})), std::vector<int>{0});
}

std::vector<int> from_table(const std::vector<std::vector<int>>& table, std::vector<int>* truth) {
  std::vector<int> pred;
  for (std::size_t p = 0; p < table.size(); ++p) {
    for (std::size_t t = 0; t < table[p].size(); ++t) {
      for (int c = 0; c < table[p][t]; ++c) {
        pred.push_back(static_cast<int>(p));
        truth->push_back(static_cast<int>(t));
      }
    }
  }
  return pred;
}

TEST(Hungarian, ContingencyExamples) {
  std::vector<int> truth;
  auto pred = from_table({{5, 0}, {0, 5}}, &truth);
  auto m = hungarian_match(pred, truth);
  EXPECT_EQ(m.agreement, 10u);
  EXPECT_EQ(m.mapping, (std::vector<int>{0, 1}));

  truth.clear();
  pred = from_table({{4, 1}, {2, 3}}, &truth);
  m = hungarian_match(pred, truth);
  EXPECT_EQ(m.agreement, 7u);
  EXPECT_EQ(m.mapping, (std::vector<int>{0, 1}));
}

TEST(Hungarian, PermutedLabelsAgreeEverywhere) {
  Rng rng(7);
  std::vector<int> truth(40);
  for (auto& t : truth) t = static_cast<int>(rng.uniform_index(4));
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<int> pred;
  for (int t : truth) pred.push_back(perm[static_cast<std::size_t>(t)]);
  EXPECT_EQ(hungarian_match(pred, truth).agreement, 40u);
}

TEST(Hungarian, MatchesBruteForceOnRandomTables) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(6);
    std::vector<std::vector<double>> w(k, std::vector<double>(k));
    for (auto& row : w)
      for (auto& v : row) v = static_cast<double>(rng.uniform_index(20));
    const auto assign = hungarian_max(w);
    double got = 0.0;
    for (std::size_t r = 0; r < k; ++r) got += w[r][static_cast<std::size_t>(assign[r])];

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    double identity = 0.0;
    for (std::size_t r = 0; r < k; ++r) identity += w[r][r];
    do {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r) s += w[r][static_cast<std::size_t>(perm[r])];
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_DOUBLE_EQ(got, best) << "trial " << trial;
    EXPECT_GE(got, identity);
  }
}

TEST(Hungarian, UnequalLabelCounts) {
  // Three predicted clusters, two true classes: one cluster stays unmatched.
  const std::vector<int> pred{0, 0, 1, 1, 2};
  const std::vector<int> truth{0, 0, 1, 1, 1};
  const auto m = hungarian_match(pred, truth);
  EXPECT_EQ(m.agreement, 4u);
  EXPECT_EQ(m.mapping[2], -1);
}

}  // namespace
}  // namespace fairclust
