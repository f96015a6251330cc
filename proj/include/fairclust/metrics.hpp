#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairclust/dataset.hpp"

namespace fairclust {

struct TrainedModel;

/// Protected-group histogram of one cluster: h_t = N_k^t / |C_k|.
struct ClusterHistogram {
  std::vector<double> h;
  std::vector<std::size_t> counts;
  std::size_t size = 0;

  [[nodiscard]] bool empty() const { return size == 0; }
};

std::vector<ClusterHistogram> cluster_histograms(const std::vector<int>& assign, const std::vector<int>& groups,
                                                 std::size_t k, int num_groups);

/// Ground metric between protected states used by fwd(). Discrete treats all
/// states as mutually unit distance apart, so the distance to uniform is the
/// total variation 0.5 * sum |h_t - 1/T|. Ordinal places states evenly on
/// [0, 1] in code order (for age-like attributes).
enum class GroundMetric { kDiscrete, kOrdinal };

const char* to_string(GroundMetric g);
GroundMetric ground_metric_from_string(const std::string& s);

/// Wasserstein-1 distance between a normalised histogram and the uniform one.
/// Throws std::invalid_argument when h is not a probability vector.
double fwd(std::span<const double> h, GroundMetric metric = GroundMetric::kDiscrete);

/// min(N1/N2, N2/N1); 0 when either count is zero. Two states only.
double balance(std::span<const std::size_t> counts);

/// |h_1 - h_2| for a two-state histogram.
double cv_score(std::span<const double> h);

/// Best-matched agreement fraction between clusters and labels.
double acc(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mutual information normalised by the geometric mean of the entropies.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

struct ClusterReport {
  ClusterHistogram histogram;
  double fwd = 0.0;
  std::optional<double> balance;
  std::optional<double> cv;
};

inline constexpr int kReportSchemaVersion = 1;

/// Empty clusters appear in per_cluster but are left out of every aggregate.
struct MetricsReport {
  std::vector<ClusterReport> per_cluster;
  double fwd_mean = 0.0;
  double fwd_max = 0.0;
  std::optional<double> balance_min;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::size_t k = 0;
  std::size_t k_effective = 0;
  int num_groups = 0;
  std::size_t n = 0;
  GroundMetric metric = GroundMetric::kDiscrete;

  [[nodiscard]] nlohmann::json to_json() const;
  /// cluster,size,fwd,count_0..count_{T-1},h_0..h_{T-1}
  [[nodiscard]] std::string histograms_csv() const;
};

MetricsReport evaluate_assignments(const std::vector<int>& pred, const Dataset& ds, std::size_t k,
                                   GroundMetric metric = GroundMetric::kDiscrete);

/// Metrics of predict(model, ds.features); ds must be in the model's input space.
MetricsReport report(const TrainedModel& model, const Dataset& ds, GroundMetric metric = GroundMetric::kDiscrete);

}  // namespace fairclust
