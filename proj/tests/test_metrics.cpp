#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "fairclust/metrics.hpp"
#include "test_util.hpp"

namespace fairclust {
namespace {

Dataset groups_only(std::vector<int> groups, int t, std::optional<std::vector<int>> labels = std::nullopt) {
  Dataset ds;
  ds.features = Tensor::Zero(static_cast<Eigen::Index>(groups.size()), 1);
  ds.groups = std::move(groups);
  ds.num_groups = t;
  ds.labels = std::move(labels);
  return ds;
}

std::vector<double> random_histogram(std::size_t t, Rng& rng) {
  std::vector<double> h(t);
  for (auto& v : h) v = rng.uniform();
  const double s = std::accumulate(h.begin(), h.end(), 0.0);
  for (auto& v : h) v /= s;
  return h;
}

TEST(Histograms, Counting) {
  auto hs = cluster_histograms({0, 0, 0, 0}, {0, 0, 1, 1}, 1, 2);
  EXPECT_EQ(hs[0].h, (std::vector<double>{0.5, 0.5}));

  hs = cluster_histograms({0, 0, 0}, {2, 2, 2}, 1, 3);
  EXPECT_EQ(hs[0].h, (std::vector<double>{0.0, 0.0, 1.0}));

  hs = cluster_histograms({0, 0, 1}, {0, 1, 1}, 3, 2);
  EXPECT_EQ(hs[0].h, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(hs[1].h, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(hs[1].counts, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(hs[2].empty());
}

TEST(Fwd, Examples) {
  EXPECT_DOUBLE_EQ(fwd(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0.0);
  EXPECT_DOUBLE_EQ(fwd(std::vector<double>{1, 0, 0, 0}), 0.75);
  EXPECT_NEAR(fwd(std::vector<double>{0.8, 0.2}), 0.3, 1e-15);
  EXPECT_THROW(fwd(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(fwd(std::vector<double>{}), std::invalid_argument);
}

TEST(Fwd, BoundsAttainedAndRespected) {
  Rng rng(1);
  for (std::size_t t = 2; t <= 8; ++t) {
    const double top = static_cast<double>(t - 1) / static_cast<double>(t);
    std::vector<double> mono(t, 0.0);
    mono[t - 1] = 1.0;
    EXPECT_NEAR(fwd(mono), top, 1e-15);
    EXPECT_NEAR(fwd(std::vector<double>(t, 1.0 / static_cast<double>(t))), 0.0, 1e-15);
    for (int trial = 0; trial < 100; ++trial) {
      const double v = fwd(random_histogram(t, rng));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, top + 1e-15);
    }
  }
}

TEST(Fwd, InvariantUnderStatePermutation) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto h = random_histogram(5, rng);
    const double a = fwd(h);
    rng.shuffle(std::span<double>(h));
    EXPECT_NEAR(fwd(h), a, 1e-15);
  }
}

TEST(Fwd, ZeroExactlyWhenConditionalProbabilitiesAgree) {
  // Equal P(cluster | state) for every state <=> histogram proportional to the
  // state totals; with equal totals that is the uniform histogram.
  const std::vector<int> groups{0, 0, 1, 1, 2, 2};
  const auto fair = cluster_histograms({0, 1, 0, 1, 0, 1}, groups, 2, 3);
  EXPECT_NEAR(fwd(fair[0].h), 0.0, 1e-15);
  const auto unfair = cluster_histograms({0, 0, 0, 1, 1, 1}, groups, 2, 3);
  EXPECT_GT(fwd(unfair[0].h), 0.0);
}

TEST(Fwd, OrdinalMetric) {
  EXPECT_NEAR(fwd(std::vector<double>{1, 0, 0}, GroundMetric::kOrdinal), (1.0 - 1.0 / 3) * 0.5 + (1.0 - 2.0 / 3) * 0.5,
              1e-15);
  EXPECT_NEAR(fwd(std::vector<double>{0.8, 0.2}, GroundMetric::kOrdinal), 0.3, 1e-15);
  // Mass moved to the far bin costs more than to the adjacent one.
  EXPECT_GT(fwd(std::vector<double>{0.0, 1.0 / 3, 2.0 / 3}, GroundMetric::kOrdinal),
            fwd(std::vector<double>{0.0, 2.0 / 3, 1.0 / 3}, GroundMetric::kOrdinal));
  EXPECT_NEAR(fwd(std::vector<double>{0.25, 0.25, 0.25, 0.25}, GroundMetric::kOrdinal), 0.0, 1e-15);
}

TEST(Balance, Examples) {
  EXPECT_DOUBLE_EQ(balance(std::vector<std::size_t>{50, 50}), 1.0);
  EXPECT_DOUBLE_EQ(balance(std::vector<std::size_t>{0, 70}), 0.0);
  EXPECT_NEAR(balance(std::vector<std::size_t>{30, 70}), 3.0 / 7.0, 1e-15);
  EXPECT_THROW(balance(std::vector<std::size_t>{1, 2, 3}), std::invalid_argument);
}

TEST(CvScore, ExamplesAndProportionality) {
  EXPECT_DOUBLE_EQ(cv_score(std::vector<double>{0.5, 0.5}), 0.0);
  EXPECT_NEAR(cv_score(std::vector<double>{0.8, 0.2}), 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(cv_score(std::vector<double>{1, 0}), 1.0);
  EXPECT_THROW(cv_score(std::vector<double>{0.2, 0.3, 0.5}), std::invalid_argument);
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto h = random_histogram(2, rng);
    EXPECT_NEAR(cv_score(h), 2.0 * fwd(h), 1e-12);
    EXPECT_NEAR(cv_score(h), std::abs(h[0] - h[1]), 1e-15);
  }
}

TEST(Acc, Examples) {
  const std::vector<int> truth{0, 0, 1, 1, 2};
  EXPECT_DOUBLE_EQ(acc(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(acc({1, 1, 0, 0, 2}, truth), 1.0);
  // Contingency [[4,1],[2,3]].
  const std::vector<int> pred{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<int> t2{0, 0, 0, 0, 1, 0, 0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(acc(pred, t2), 0.7);
}

TEST(Nmi, Examples) {
  EXPECT_NEAR(nmi({0, 0, 1, 1, 2}, {0, 0, 1, 1, 2}), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(nmi({0, 0, 0, 0}, {0, 0, 1, 1}), 0.0);
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 1, 0, 1}), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(nmi({3, 3}, {1, 1}), 1.0);
}

TEST(Nmi, GeometricMeanNormalisation) {
  // pred {0,0,1,1}, truth {0,0,0,1}: hand-evaluated entropies and information.
  const double hp = std::log(2.0);
  const double ht = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double mi = 0.5 * std::log(0.5 / (0.5 * 0.75)) + 0.25 * std::log(0.25 / (0.5 * 0.75)) +
                    0.25 * std::log(0.25 / (0.5 * 0.25));
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 0, 0, 1}), mi / std::sqrt(hp * ht), 1e-12);
}

TEST(AccNmi, RelabelInvariantAndNmiSymmetric) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pred(40), truth(40);
    for (auto& v : pred) v = static_cast<int>(rng.uniform_index(4));
    for (auto& v : truth) v = static_cast<int>(rng.uniform_index(3));
    std::vector<int> perm{0, 1, 2, 3};
    rng.shuffle(std::span<int>(perm));
    std::vector<int> relabeled;
    for (int p : pred) relabeled.push_back(perm[static_cast<std::size_t>(p)]);
    EXPECT_DOUBLE_EQ(acc(relabeled, truth), acc(pred, truth));
    EXPECT_NEAR(nmi(relabeled, truth), nmi(pred, truth), 1e-12);
    EXPECT_NEAR(nmi(pred, truth), nmi(truth, pred), 1e-12);
    const double v = nmi(pred, truth);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Report, PerfectFairClusters) {
  const auto ds = groups_only({0, 1, 0, 1}, 2, std::vector<int>{0, 0, 1, 1});
  const auto r = evaluate_assignments({0, 0, 1, 1}, ds, 2);
  EXPECT_DOUBLE_EQ(r.fwd_mean, 0.0);
  EXPECT_DOUBLE_EQ(r.fwd_max, 0.0);
  EXPECT_DOUBLE_EQ(*r.acc, 1.0);
  EXPECT_DOUBLE_EQ(*r.balance_min, 1.0);
  EXPECT_EQ(r.k_effective, 2u);
}

TEST(Report, SingleNonEmptyCluster) {
  const auto ds = groups_only({0, 0, 1, 0}, 2);
  const auto r = evaluate_assignments({1, 1, 1, 1}, ds, 3);
  EXPECT_EQ(r.k_effective, 1u);
  EXPECT_NEAR(r.fwd_mean, 0.25, 1e-15);
  EXPECT_NEAR(r.fwd_max, 0.25, 1e-15);
  EXPECT_NEAR(*r.balance_min, 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(r.acc.has_value());
  EXPECT_TRUE(r.per_cluster[0].histogram.empty());
}

TEST(Report, BalanceOnlyForTwoStates) {
  const auto ds = groups_only({0, 1, 2, 0}, 3);
  const auto r = evaluate_assignments({0, 0, 1, 1}, ds, 2);
  EXPECT_FALSE(r.balance_min.has_value());
  EXPECT_FALSE(r.per_cluster[0].cv.has_value());
  EXPECT_GE(r.fwd_max, r.fwd_mean);
}

TEST(Report, JsonSchemaAndCsv) {
  const auto ds = groups_only({0, 1, 0, 1, 1}, 2, std::vector<int>{0, 0, 1, 1, 1});
  const auto r = evaluate_assignments({0, 0, 1, 1, 1}, ds, 3);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("schema"), "fairclust.metrics");
  EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
  for (const char* key : {"n", "k", "k_effective", "t", "ground_metric", "fwd_mean", "fwd_max", "balance_min", "acc",
                          "nmi", "per_cluster"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  ASSERT_EQ(j.at("per_cluster").size(), 3u);
  EXPECT_TRUE(j.at("per_cluster")[2].at("empty").get<bool>());
  EXPECT_TRUE(j.at("per_cluster")[2].at("fwd").is_null());

  const auto csv = r.histograms_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "cluster,size,fwd,count_0,count_1,h_0,h_1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace fairclust
