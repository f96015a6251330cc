#include <cmath>
#include <stdexcept>

#include "fairclust/dataset.hpp"
#include "fairclust/rng.hpp"

namespace fairclust {

void SynthSpec::validate() const {
  if (n_points == 0) throw std::invalid_argument("synth: n_points must be positive");
  if (dims == 0) throw std::invalid_argument("synth: dims must be positive");
  if (n_blobs == 0) throw std::invalid_argument("synth: n_blobs must be at least 1");
  if (num_groups < 2) throw std::invalid_argument("synth: T must be at least 2");
  if (!(correlation >= 0.0 && correlation <= 1.0)) throw std::invalid_argument("synth: correlation must lie in [0, 1]");
  if (!(blob_spread > 0.0) || !std::isfinite(blob_spread)) throw std::invalid_argument("synth: blob_spread must be positive");
  if (n_points < static_cast<std::size_t>(num_groups)) throw std::invalid_argument("synth: n_points must be >= T");
}

namespace {

Tensor blob_centres(const SynthSpec& spec, Rng& rng) {
  const auto b = static_cast<Eigen::Index>(spec.n_blobs);
  const auto d = static_cast<Eigen::Index>(spec.dims);
  Tensor centres = Tensor::Zero(b, d);
  if (spec.n_blobs <= spec.dims) {
    // Scaled axis points e_i / sqrt(2) are pairwise at distance 1; a random
    // orthogonal map keeps that while mixing the coordinates.
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    for (Eigen::Index i = 0; i < b; ++i) centres.row(i) = q.row(i) / std::sqrt(2.0);
  } else {
    const double sd = 1.0 / std::sqrt(2.0 * static_cast<double>(d));
    for (Eigen::Index i = 0; i < centres.size(); ++i) centres.data()[i] = sd * rng.normal();
  }
  return centres;
}

}  // namespace

Dataset synth_blobs(const SynthSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  Rng centre_rng = root.substream("centres");
  Rng point_rng = root.substream("points");
  Rng group_rng = root.substream("groups");

  const Tensor centres = blob_centres(spec, centre_rng);
  const auto n = static_cast<Eigen::Index>(spec.n_points);
  const auto d = static_cast<Eigen::Index>(spec.dims);
  const auto t = static_cast<std::uint64_t>(spec.num_groups);

  Dataset ds;
  ds.features.resize(n, d);
  std::vector<int> labels(spec.n_points);
  ds.groups.resize(spec.n_points);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto blob = static_cast<std::size_t>(i) % spec.n_blobs;
    for (Eigen::Index c = 0; c < d; ++c) {
      ds.features(i, c) = centres(static_cast<Eigen::Index>(blob), c) + spec.blob_spread * point_rng.normal();
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(blob);
    const bool aligned = group_rng.bernoulli(spec.correlation);
    const std::uint64_t draw = group_rng.uniform_index(t);  // drawn either way so streams stay aligned
    ds.groups[static_cast<std::size_t>(i)] = static_cast<int>(aligned ? blob % t : draw);
  }
  ds.labels = std::move(labels);
  ds.num_groups = spec.num_groups;
  for (Eigen::Index c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  for (int g = 0; g < spec.num_groups; ++g) ds.group_levels.push_back(std::to_string(g));
  for (std::size_t l = 0; l < std::min(spec.n_blobs, spec.n_points); ++l) ds.label_levels.push_back(std::to_string(l));

  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("synth: draw left a protected state empty; increase n_points (") +
                                e.what() + ")");
  }
  return ds;
}

}  // namespace fairclust
