#include "fairclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fairclust/fair_dec.hpp"
#include "fairclust/kmeans.hpp"

namespace fairclust {

using nlohmann::json;

std::vector<ClusterHistogram> cluster_histograms(const std::vector<int>& assign, const std::vector<int>& groups,
                                                 std::size_t k, int num_groups) {
  if (assign.size() != groups.size()) throw std::invalid_argument("cluster_histograms: length mismatch");
  if (num_groups < 1) throw std::invalid_argument("cluster_histograms: T must be positive");
  const auto t = static_cast<std::size_t>(num_groups);
  std::vector<ClusterHistogram> out(k);
  for (auto& c : out) {
    c.counts.assign(t, 0);
    c.h.assign(t, 0.0);
  }
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const int a = assign[i];
    const int g = groups[i];
    if (a < 0 || static_cast<std::size_t>(a) >= k) throw std::invalid_argument("cluster_histograms: cluster out of range");
    if (g < 0 || g >= num_groups) throw std::invalid_argument("cluster_histograms: protected state out of range");
    ++out[static_cast<std::size_t>(a)].counts[static_cast<std::size_t>(g)];
    ++out[static_cast<std::size_t>(a)].size;
  }
  for (auto& c : out) {
    if (c.size == 0) continue;
    for (std::size_t s = 0; s < t; ++s) c.h[s] = static_cast<double>(c.counts[s]) / static_cast<double>(c.size);
  }
  return out;
}

const char* to_string(GroundMetric g) { return g == GroundMetric::kOrdinal ? "ordinal" : "discrete"; }

GroundMetric ground_metric_from_string(const std::string& s) {
  if (s == "discrete") return GroundMetric::kDiscrete;
  if (s == "ordinal") return GroundMetric::kOrdinal;
  throw std::invalid_argument("unknown ground metric '" + s + "' (expected discrete or ordinal)");
}

double fwd(std::span<const double> h, GroundMetric metric) {
  const std::size_t t = h.size();
  if (t == 0) throw std::invalid_argument("fwd: empty histogram");
  double sum = 0.0;
  for (const double v : h) {
    if (!(v >= 0.0)) throw std::invalid_argument("fwd: histogram has a negative or non-finite bin");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("fwd: histogram is not normalised");
  if (t == 1) return 0.0;
  const double u = 1.0 / static_cast<double>(t);
  double d = 0.0;
  if (metric == GroundMetric::kDiscrete) {
    for (const double v : h) d += std::abs(v - u);
    return 0.5 * d;
  }
  // Positions t / (T - 1): W1 is the area between the two CDFs.
  double cdf_h = 0.0;
  for (std::size_t s = 0; s + 1 < t; ++s) {
    cdf_h += h[s];
    d += std::abs(cdf_h - static_cast<double>(s + 1) * u);
  }
  return d / static_cast<double>(t - 1);
}

double balance(std::span<const std::size_t> counts) {
  if (counts.size() != 2) {
    throw std::invalid_argument("balance: defined for T=2 only, got T=" + std::to_string(counts.size()));
  }
  if (counts[0] == 0 || counts[1] == 0) return 0.0;
  const auto a = static_cast<double>(counts[0]);
  const auto b = static_cast<double>(counts[1]);
  return std::min(a / b, b / a);
}

double cv_score(std::span<const double> h) {
  if (h.size() != 2) throw std::invalid_argument("cv_score: defined for T=2 only, got T=" + std::to_string(h.size()));
  if (std::abs(h[0] + h[1] - 1.0) > 1e-9) throw std::invalid_argument("cv_score: histogram is not normalised");
  return std::abs(h[0] - h[1]);
}

double acc(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("acc: length mismatch");
  if (pred.empty()) return 0.0;
  return static_cast<double>(hungarian_match(pred, truth).agreement) / static_cast<double>(pred.size());
}

namespace {

double entropy(const std::map<int, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("nmi: length mismatch");
  if (pred.empty()) return 0.0;
  const auto n = static_cast<double>(pred.size());
  std::map<int, double> cp, ct;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    cp[pred[i]] += 1.0;
    ct[truth[i]] += 1.0;
    joint[{pred[i], truth[i]}] += 1.0;
  }
  const double hp = entropy(cp, n);
  const double ht = entropy(ct, n);
  if (hp == 0.0 && ht == 0.0) return 1.0;  // both single-class: identical partitions
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log((c * n) / (cp[key.first] * ct[key.second]));
  }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

json MetricsReport::to_json() const {
  json clusters = json::array();
  for (std::size_t c = 0; c < per_cluster.size(); ++c) {
    const auto& pc = per_cluster[c];
    json j{{"cluster", c},
           {"size", pc.histogram.size},
           {"counts", pc.histogram.counts},
           {"histogram", pc.histogram.h},
           {"empty", pc.histogram.empty()},
           {"fwd", pc.histogram.empty() ? json(nullptr) : json(pc.fwd)}};
    j["balance"] = pc.balance ? json(*pc.balance) : json(nullptr);
    j["cv"] = pc.cv ? json(*pc.cv) : json(nullptr);
    clusters.push_back(std::move(j));
  }
  return json{{"schema", "fairclust.metrics"},
              {"schema_version", kReportSchemaVersion},
              {"n", n},
              {"k", k},
              {"k_effective", k_effective},
              {"t", num_groups},
              {"ground_metric", fairclust::to_string(metric)},
              {"fwd_mean", fwd_mean},
              {"fwd_max", fwd_max},
              {"balance_min", balance_min ? json(*balance_min) : json(nullptr)},
              {"acc", acc ? json(*acc) : json(nullptr)},
              {"nmi", nmi ? json(*nmi) : json(nullptr)},
              {"per_cluster", clusters}};
}

std::string MetricsReport::histograms_csv() const {
  std::ostringstream out;
  out << "cluster,size,fwd";
  for (int t = 0; t < num_groups; ++t) out << ",count_" << t;
  for (int t = 0; t < num_groups; ++t) out << ",h_" << t;
  out << '\n';
  for (std::size_t c = 0; c < per_cluster.size(); ++c) {
    const auto& pc = per_cluster[c];
    out << c << ',' << pc.histogram.size << ',';
    if (!pc.histogram.empty()) out << format_real(pc.fwd);
    for (const auto v : pc.histogram.counts) out << ',' << v;
    for (const auto v : pc.histogram.h) out << ',' << format_real(v);
    out << '\n';
  }
  return out.str();
}

MetricsReport evaluate_assignments(const std::vector<int>& pred, const Dataset& ds, std::size_t k,
                                   GroundMetric metric) {
  if (pred.size() != ds.size()) throw std::invalid_argument("evaluate: prediction count does not match dataset");
  MetricsReport r;
  r.k = k;
  r.n = ds.size();
  r.num_groups = ds.num_groups;
  r.metric = metric;
  const auto hists = cluster_histograms(pred, ds.groups, k, ds.num_groups);
  double fwd_sum = 0.0;
  for (const auto& h : hists) {
    ClusterReport cr;
    cr.histogram = h;
    if (!h.empty()) {
      cr.fwd = fwd(h.h, metric);
      if (ds.num_groups == 2) {
        cr.balance = balance(h.counts);
        cr.cv = cv_score(h.h);
        r.balance_min = r.balance_min ? std::min(*r.balance_min, *cr.balance) : *cr.balance;
      }
      ++r.k_effective;
      fwd_sum += cr.fwd;
      r.fwd_max = std::max(r.fwd_max, cr.fwd);
    }
    r.per_cluster.push_back(std::move(cr));
  }
  r.fwd_mean = r.k_effective > 0 ? fwd_sum / static_cast<double>(r.k_effective) : 0.0;
  if (ds.labels) {
    r.acc = fairclust::acc(pred, *ds.labels);
    r.nmi = fairclust::nmi(pred, *ds.labels);
  }
  return r;
}

MetricsReport report(const TrainedModel& model, const Dataset& ds, GroundMetric metric) {
  return evaluate_assignments(predict(model, ds.features), ds, model.cfg.k, metric);
}

}  // namespace fairclust
