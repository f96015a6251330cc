#include "fairclust/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fairclust/checkpoint.hpp"
#include "fairclust/rng.hpp"

namespace fairclust {

using nlohmann::json;

int Dataset::num_labels() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void Dataset::validate(bool require_all_groups) const {
  const auto n = groups.size();
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw std::invalid_argument("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                                std::to_string(n) + " protected values");
  }
  if (num_groups < 1) throw std::invalid_argument("dataset: num_groups must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_groups), 0);
  for (const int g : groups) {
    if (g < 0 || g >= num_groups) throw std::invalid_argument("dataset: protected value out of range");
    ++counts[static_cast<std::size_t>(g)];
  }
  if (require_all_groups) {
    for (std::size_t t = 0; t < counts.size(); ++t) {
      if (counts[t] == 0) throw std::invalid_argument("dataset: protected state " + std::to_string(t) + " is empty");
    }
  }
  if (!features.allFinite()) throw std::invalid_argument("dataset: features contain non-finite values");
  if (labels) {
    if (labels->size() != n) throw std::invalid_argument("dataset: label count does not match row count");
    for (const int l : *labels) {
      if (l < 0) throw std::invalid_argument("dataset: negative label");
    }
  }
  if (!feature_names.empty() && feature_names.size() != dims()) {
    throw std::invalid_argument("dataset: feature name count does not match feature columns");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = take_rows(features, rows);
  out.groups.reserve(rows.size());
  for (const auto r : rows) out.groups.push_back(groups.at(r));
  if (labels) {
    std::vector<int> l;
    l.reserve(rows.size());
    for (const auto r : rows) l.push_back(labels->at(r));
    out.labels = std::move(l);
  }
  out.num_groups = num_groups;
  out.feature_names = feature_names;
  out.group_levels = group_levels;
  out.label_levels = label_levels;
  return out;
}

const char* to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::kFeature:
      return "feature";
    case ColumnRole::kLabel:
      return "label";
    case ColumnRole::kProtected:
      return "protected";
    case ColumnRole::kCategorical:
      return "categorical";
    case ColumnRole::kIgnore:
      return "ignore";
  }
  return "feature";
}

ColumnRole column_role_from_string(const std::string& s) {
  if (s == "feature") return ColumnRole::kFeature;
  if (s == "label") return ColumnRole::kLabel;
  if (s == "protected") return ColumnRole::kProtected;
  if (s == "categorical") return ColumnRole::kCategorical;
  if (s == "ignore") return ColumnRole::kIgnore;
  throw std::invalid_argument("unknown column role '" + s + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields with optional double-quote quoting.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Codes values by first appearance, or by a fixed level list when given.
class LevelCoder {
 public:
  explicit LevelCoder(std::vector<std::string> fixed) : levels_(std::move(fixed)), fixed_(!levels_.empty()) {
    for (std::size_t i = 0; i < levels_.size(); ++i) index_[levels_[i]] = static_cast<int>(i);
  }

  // Returns -1 for a value outside a fixed level list.
  int code(const std::string& v) {
    if (auto it = index_.find(v); it != index_.end()) return it->second;
    if (fixed_) return -1;
    const int c = static_cast<int>(levels_.size());
    levels_.push_back(v);
    index_[v] = c;
    return c;
  }

  [[nodiscard]] const std::vector<std::string>& levels() const { return levels_; }

 private:
  std::vector<std::string> levels_;
  std::map<std::string, int> index_;
  bool fixed_;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_csv_line(line);
  const std::size_t ncols = header.size();

  for (const auto& [name, role] : schema.roles) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError(path.string() + ": schema names column '" + name + "' which is not in the header");
    }
  }

  std::vector<ColumnRole> roles(ncols, ColumnRole::kFeature);
  int protected_col = -1;
  int label_col = -1;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (auto it = schema.roles.find(header[c]); it != schema.roles.end()) roles[c] = it->second;
    if (roles[c] == ColumnRole::kProtected) {
      if (protected_col >= 0) throw DataError(path.string() + ": more than one protected column");
      protected_col = static_cast<int>(c);
    } else if (roles[c] == ColumnRole::kLabel) {
      if (label_col >= 0) throw DataError(path.string() + ": more than one label column");
      label_col = static_cast<int>(c);
    }
  }
  if (protected_col < 0) throw DataError(path.string() + ": exactly one protected column is required");

  // First pass: raw cells.
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncols) {
      throw DataError(path.string() + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(ncols));
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      if (cells[c].empty() && roles[c] != ColumnRole::kIgnore) {
        throw DataError(path.string() + ": missing value at row " + std::to_string(line_no) + ", column '" +
                        header[c] + "'");
      }
    }
    rows.push_back(std::move(cells));
  }
  const std::size_t n = rows.size();

  // Categorical levels in first-appearance order, per column.
  std::vector<LevelCoder> cat_coders;
  std::vector<int> cat_index(ncols, -1);
  for (std::size_t c = 0; c < ncols; ++c) {
    if (roles[c] == ColumnRole::kCategorical) {
      cat_index[c] = static_cast<int>(cat_coders.size());
      cat_coders.emplace_back(std::vector<std::string>{});
      for (const auto& r : rows) cat_coders.back().code(r[c]);
    }
  }

  Dataset ds;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (roles[c] == ColumnRole::kFeature) {
      ds.feature_names.push_back(header[c]);
    } else if (roles[c] == ColumnRole::kCategorical) {
      for (const auto& lvl : cat_coders[static_cast<std::size_t>(cat_index[c])].levels()) {
        ds.feature_names.push_back(header[c] + "=" + lvl);
      }
    }
  }

  ds.features = Tensor::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ds.feature_names.size()));
  LevelCoder group_coder(schema.protected_levels);
  LevelCoder label_coder(schema.label_levels);
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    Eigen::Index fc = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      switch (roles[c]) {
        case ColumnRole::kFeature: {
          double v = 0.0;
          if (!parse_double(r[c], v)) {
            throw DataError(path.string() + ": cannot parse '" + r[c] + "' as a number at row " +
                            std::to_string(i + 2) + ", column '" + header[c] + "'");
          }
          ds.features(static_cast<Eigen::Index>(i), fc++) = v;
          break;
        }
        case ColumnRole::kCategorical: {
          auto& coder = cat_coders[static_cast<std::size_t>(cat_index[c])];
          const int level = coder.code(r[c]);
          ds.features(static_cast<Eigen::Index>(i), fc + level) = 1.0;
          fc += static_cast<Eigen::Index>(coder.levels().size());
          break;
        }
        case ColumnRole::kProtected: {
          const int g = group_coder.code(r[c]);
          if (g < 0) {
            throw DataError(path.string() + ": unknown protected value '" + r[c] + "' at row " +
                            std::to_string(i + 2));
          }
          ds.groups.push_back(g);
          break;
        }
        case ColumnRole::kLabel: {
          const int l = label_coder.code(r[c]);
          if (l < 0) {
            throw DataError(path.string() + ": unknown label '" + r[c] + "' at row " + std::to_string(i + 2));
          }
          labels.push_back(l);
          break;
        }
        case ColumnRole::kIgnore:
          break;
      }
    }
  }

  ds.group_levels = group_coder.levels();
  ds.num_groups = static_cast<int>(ds.group_levels.size());
  if (ds.num_groups < 2) throw DataError(path.string() + ": T=" + std::to_string(ds.num_groups) + ": fairness undefined");
  if (n < static_cast<std::size_t>(ds.num_groups)) {
    throw DataError(path.string() + ": fewer rows than protected states");
  }
  if (label_col >= 0) {
    ds.labels = std::move(labels);
    ds.label_levels = label_coder.levels();
  }
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return ds;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

void export_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate(false);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());

  std::vector<std::string> names = ds.feature_names;
  for (std::size_t c = names.size(); c < ds.dims(); ++c) names.push_back("x" + std::to_string(c));

  json roles = json::object();
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << (c ? "," : "") << csv_escape(names[c]);
    roles[names[c]] = "feature";
  }
  const bool has_labels = ds.labels.has_value();
  if (has_labels) {
    out << (names.empty() ? "" : ",") << "label";
    roles["label"] = "label";
  }
  out << (names.empty() && !has_labels ? "" : ",") << "protected\n";
  roles["protected"] = "protected";

  auto level_name = [](const std::vector<std::string>& levels, int code) {
    return code < static_cast<int>(levels.size()) ? levels[static_cast<std::size_t>(code)] : std::to_string(code);
  };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.dims(); ++c) {
      out << (c ? "," : "") << format_real(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    if (has_labels) out << (ds.dims() ? "," : "") << csv_escape(level_name(ds.label_levels, (*ds.labels)[i]));
    out << (ds.dims() || has_labels ? "," : "") << csv_escape(level_name(ds.group_levels, ds.groups[i])) << '\n';
  }

  std::vector<std::string> group_levels;
  for (int t = 0; t < ds.num_groups; ++t) group_levels.push_back(level_name(ds.group_levels, t));
  json manifest{{"schema_version", 1},
                {"n", ds.size()},
                {"d", ds.dims()},
                {"t", ds.num_groups},
                {"column_roles", roles},
                {"protected_levels", group_levels}};
  if (has_labels) {
    std::vector<std::string> label_levels;
    for (int l = 0; l < ds.num_labels(); ++l) label_levels.push_back(level_name(ds.label_levels, l));
    manifest["label_levels"] = label_levels;
  }
  write_json_file(manifest_path_for(path), manifest);
}

std::optional<CsvSchema> schema_from_manifest(const std::filesystem::path& csv) {
  const auto mp = manifest_path_for(csv);
  if (!std::filesystem::exists(mp)) return std::nullopt;
  const json m = read_json_file(mp);
  CsvSchema schema;
  for (const auto& [name, role] : m.at("column_roles").items()) {
    schema.set(name, column_role_from_string(role.get<std::string>()));
  }
  if (m.contains("protected_levels")) schema.protected_levels = m["protected_levels"].get<std::vector<std::string>>();
  if (m.contains("label_levels")) schema.label_levels = m["label_levels"].get<std::vector<std::string>>();
  return schema;
}

const char* to_string(NormMode m) {
  switch (m) {
    case NormMode::kNone:
      return "none";
    case NormMode::kMinMax:
      return "minmax";
    case NormMode::kZScore:
      return "zscore";
  }
  return "none";
}

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "none") return NormMode::kNone;
  if (s == "minmax") return NormMode::kMinMax;
  if (s == "zscore") return NormMode::kZScore;
  throw std::invalid_argument("unknown normalization '" + s + "' (expected minmax, zscore or none)");
}

Tensor NormStats::apply(const Tensor& x) const {
  if (mode == NormMode::kNone) return x;
  if (x.cols() != offset.size()) {
    throw ShapeError("normalizer fitted on " + std::to_string(offset.size()) + " columns applied to " + shape_str(x));
  }
  Tensor out = x;
  out.rowwise() -= offset;
  out.array().rowwise() *= scale.array();
  return out;
}

json NormStats::to_json() const {
  return json{{"mode", fairclust::to_string(mode)},
              {"offset", std::vector<double>(offset.data(), offset.data() + offset.size())},
              {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
}

NormStats NormStats::from_json(const json& j) {
  NormStats s;
  s.mode = norm_mode_from_string(j.at("mode").get<std::string>());
  const auto o = j.at("offset").get<std::vector<double>>();
  const auto sc = j.at("scale").get<std::vector<double>>();
  if (o.size() != sc.size()) throw ShapeError("normalizer: offset/scale length mismatch");
  s.offset = Eigen::Map<const RowVector>(o.data(), static_cast<Eigen::Index>(o.size()));
  s.scale = Eigen::Map<const RowVector>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  return s;
}

NormStats fit_normalizer(const Tensor& x, NormMode mode) {
  NormStats s;
  s.mode = mode;
  const Eigen::Index d = x.cols();
  s.offset = RowVector::Zero(d);
  s.scale = RowVector::Ones(d);
  if (mode == NormMode::kNone) return s;
  if (x.rows() < 2) throw std::invalid_argument("normalize: at least two rows are required");
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto col = x.col(c);
    if (mode == NormMode::kMinMax) {
      const double lo = col.minCoeff();
      const double hi = col.maxCoeff();
      s.offset(c) = lo;
      s.scale(c) = hi > lo ? 1.0 / (hi - lo) : 0.0;
    } else {
      const double mean = col.mean();
      const double var = (col.array() - mean).square().sum() / static_cast<double>(x.rows() - 1);
      s.offset(c) = mean;
      s.scale(c) = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }
  }
  return s;
}

Dataset normalize(const Dataset& ds, NormMode mode) {
  Dataset out = ds;
  out.features = fit_normalizer(ds.features, mode).apply(ds.features);
  return out;
}

SplitIndices split_indices(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(ds.num_groups));
  for (std::size_t i = 0; i < ds.size(); ++i) by_group[static_cast<std::size_t>(ds.groups[i])].push_back(i);

  Rng rng = Rng(seed).substream("split");
  SplitIndices out;
  for (auto& members : by_group) {
    const std::size_t m = members.size();
    rng.shuffle(std::span<std::size_t>(members));
    std::size_t n_test = 0;
    if (m >= 2) {
      const auto want = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
      n_test = std::clamp<std::size_t>(want, 1, m - 1);
    }
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  if (out.train.empty() || out.test.empty()) throw std::invalid_argument("split: test fraction leaves an empty part");
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  const auto idx = split_indices(ds, test_fraction, seed);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

}  // namespace fairclust
