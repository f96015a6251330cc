#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fairclust/tensor.hpp"

namespace fairclust {

/// Features plus protected-group annotations and optional ground truth.
///
/// Invariants (checked by validate()): groups hold values in 0..num_groups-1,
/// features are finite, labels (when present) have one entry per row. Every
/// group must be non-empty for a freshly loaded dataset; subsets produced by
/// split() keep the parent's num_groups even if a group is absent.
struct Dataset {
  Tensor features;
  std::optional<std::vector<int>> labels;
  std::vector<int> groups;
  int num_groups = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> group_levels;  // original protected value per code
  std::vector<std::string> label_levels;  // original label value per code

  [[nodiscard]] std::size_t size() const { return groups.size(); }
  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
  [[nodiscard]] int num_labels() const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate(bool require_all_groups = true) const;

  [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;
};

enum class ColumnRole { kFeature, kLabel, kProtected, kCategorical, kIgnore };

const char* to_string(ColumnRole r);
ColumnRole column_role_from_string(const std::string& s);

/// Column roles by header name. Columns not listed are numeric features.
struct CsvSchema {
  std::map<std::string, ColumnRole> roles;
  /// Optional fixed level orders; when set, values are coded by position
  /// instead of first appearance and unknown values are errors.
  std::vector<std::string> protected_levels;
  std::vector<std::string> label_levels;

  CsvSchema& set(const std::string& column, ColumnRole role) {
    roles[column] = role;
    return *this;
  }
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a comma-separated file with a header row. Categorical columns are
/// one-hot expanded in place (feature names "<col>=<level>"); protected and
/// label values are re-coded by first appearance.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Sidecar manifest path for a dataset CSV: "data.csv" -> "data.manifest.json".
std::filesystem::path manifest_path_for(const std::filesystem::path& csv);

/// Writes features, then "label" (if any), then "protected", plus the manifest.
void export_csv(const Dataset& ds, const std::filesystem::path& path);

/// Schema recovered from a manifest written by export_csv, if one exists.
std::optional<CsvSchema> schema_from_manifest(const std::filesystem::path& csv);

enum class NormMode { kNone, kMinMax, kZScore };

const char* to_string(NormMode m);
NormMode norm_mode_from_string(const std::string& s);

/// Per-column affine map x -> (x - offset) * scale. Constant columns get scale 0.
struct NormStats {
  NormMode mode = NormMode::kNone;
  RowVector offset;
  RowVector scale;

  [[nodiscard]] Tensor apply(const Tensor& x) const;
  [[nodiscard]] nlohmann::json to_json() const;
  static NormStats from_json(const nlohmann::json& j);
};

NormStats fit_normalizer(const Tensor& x, NormMode mode);

/// minmax -> [0, 1]; zscore -> mean 0, sample std 1; constant columns -> 0.
Dataset normalize(const Dataset& ds, NormMode mode);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified by protected group: a group of size m >= 2 contributes
/// clamp(round(fraction * m), 1, m - 1) rows to the test part; singleton
/// groups stay in train. Both index lists are sorted.
SplitIndices split_indices(const Dataset& ds, double test_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Gaussian blobs with protected groups correlated to blob membership.
struct SynthSpec {
  std::size_t n_points = 1000;
  std::size_t dims = 10;
  std::size_t n_blobs = 4;
  int num_groups = 4;
  /// Probability that a point's group is (blob mod T) instead of uniform.
  double correlation = 0.0;
  /// Within-blob standard deviation per coordinate, in units of the gap
  /// between blob centres.
  double blob_spread = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Blob centres are pairwise at unit distance (scaled axis points under a
/// random rotation) when n_blobs <= dims, otherwise Gaussian with unit mean
/// squared gap. Point i belongs to blob i mod n_blobs.
Dataset synth_blobs(const SynthSpec& spec);

}  // namespace fairclust
