#include "fairclust/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace fairclust {

const char* command_name(Command c) {
  switch (c) {
    case kCmdSynth:
      return "synth";
    case kCmdPretrain:
      return "pretrain";
    case kCmdTrain:
      return "train";
    case kCmdEval:
      return "eval";
    case kCmdSweep:
      return "sweep";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  const double v = parse_number<double>(key, text);
  if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  if (trim(text).starts_with('-')) throw ConfigError(key + ": value must be non-negative");
  return parse_number<std::size_t>(key, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& text, F parse_one) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_one(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(v[i]);
    } else if constexpr (std::is_arithmetic_v<T>) {
      out += std::to_string(v[i]);
    } else {
      out += v[i];
    }
  }
  return out;
}


constexpr unsigned kData = kCmdPretrain | kCmdTrain | kCmdEval | kCmdSweep;
constexpr unsigned kFit = kCmdPretrain | kCmdTrain | kCmdSweep;
constexpr unsigned kCluster = kCmdTrain | kCmdSweep;
constexpr unsigned kAll = kCmdSynth | kData;

#define FC_STRING(KEY, MEMBER, CMDS, HELP)                                                   \
  ConfigField {                                                                              \
    KEY, HELP, CMDS, [](RunConfig& c, const std::string& v) { c.MEMBER = trim(v); },         \
        [](const RunConfig& c) { return c.MEMBER; }                                          \
  }
#define FC_REAL(KEY, MEMBER, CMDS, HELP)                                                     \
  ConfigField {                                                                              \
    KEY, HELP, CMDS, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_real(KEY, v); }, \
        [](const RunConfig& c) { return format_real(c.MEMBER); }                                \
  }
#define FC_COUNT(KEY, MEMBER, CMDS, HELP)                                                      \
  ConfigField {                                                                                \
    KEY, HELP, CMDS, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_count(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                            \
  }
#define FC_LIST(KEY, MEMBER, CMDS, HELP)                                                     \
  ConfigField {                                                                              \
    KEY, HELP, CMDS, [](RunConfig& c, const std::string& v) { c.MEMBER = split_list(v); },   \
        [](const RunConfig& c) { return join(c.MEMBER); }                                    \
  }

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> f = {
      FC_STRING("out", out, kAll, "output directory (required)"),

      FC_STRING("data", data, kData, "dataset CSV"),
      FC_STRING("label", label, kData, "ground-truth label column"),
      FC_STRING("protected", protected_column, kData, "protected attribute column"),
      FC_LIST("categorical", categorical, kData, "comma-separated columns to one-hot encode"),
      FC_LIST("ignore", ignore, kData, "comma-separated columns to drop"),
      FC_LIST("protected_levels", protected_levels, kData, "fixed order of protected values"),
      FC_LIST("label_levels", label_levels, kData, "fixed order of label values"),
      ConfigField{"norm", "none | minmax | zscore", kFit,
                  [](RunConfig& c, const std::string& v) {
                    try {
                      c.norm = norm_mode_from_string(trim(v));
                    } catch (const std::invalid_argument& e) {
                      throw ConfigError(std::string("norm: ") + e.what());
                    }
                  },
                  [](const RunConfig& c) { return std::string(to_string(c.norm)); }},

      FC_COUNT("n", synth.n_points, kCmdSynth, "number of points"),
      FC_COUNT("dims", synth.dims, kCmdSynth, "feature dimension"),
      FC_COUNT("blobs", synth.n_blobs, kCmdSynth, "number of blobs"),
      ConfigField{"t", "number of protected states", kCmdSynth,
                  [](RunConfig& c, const std::string& v) {
                    const auto t = parse_count("t", v);
                    if (t > 1000000) throw ConfigError("t: value too large");
                    c.synth.num_groups = static_cast<int>(t);
                  },
                  [](const RunConfig& c) { return std::to_string(c.synth.num_groups); }},
      FC_REAL("corr", synth.correlation, kCmdSynth, "probability that group follows blob, in [0, 1]"),
      FC_REAL("spread", synth.blob_spread, kCmdSynth, "within-blob std in units of the centre gap"),
      ConfigField{"seed", "generator seed", kCmdSynth,
                  [](RunConfig& c, const std::string& v) { c.synth.seed = parse_number<std::uint64_t>("seed", v); },
                  [](const RunConfig& c) { return std::to_string(c.synth.seed); }},

      ConfigField{"hidden", "comma-separated hidden widths of the encoder", kFit,
                  [](RunConfig& c, const std::string& v) {
                    c.hidden = parse_list<Eigen::Index>(v, [](const std::string& s) {
                      return static_cast<Eigen::Index>(parse_count("hidden", s));
                    });
                  },
                  [](const RunConfig& c) { return join(c.hidden); }},
      FC_COUNT("latent", latent, kFit, "bottleneck width; 0 means k"),
      FC_COUNT("layerwise_epochs", layerwise_epochs, kFit, "greedy layer-wise pretraining epochs"),
      FC_COUNT("global_epochs", global_epochs, kFit, "end-to-end fine-tuning epochs"),
      FC_REAL("lr_pretrain", lr_pretrain, kFit, "pretraining learning rate"),
      FC_REAL("dropout", dropout, kFit, "input dropout during layer-wise pretraining"),
      FC_REAL("init_std", init_std, kFit, "weight init std; 0 selects fan-in scaling"),
      ConfigField{"ae_seed", "seed of a shared pretraining run", kCmdPretrain | kCmdSweep,
                  [](RunConfig& c, const std::string& v) { c.ae_seed = parse_number<std::uint64_t>("ae_seed", v); },
                  [](const RunConfig& c) { return std::to_string(c.ae_seed); }},
      FC_STRING("ae", ae, kCluster, "pretrained autoencoder checkpoint"),
      FC_STRING("pretrain", pretrain, kCmdTrain, "checkpoint | inline (pretrain per seed)"),

      FC_COUNT("k", train.k, kFit, "number of clusters"),
      FC_REAL("gamma", train.gamma, kCluster, "fairness weight"),
      FC_REAL("beta", train.beta, kCluster, "smoothing root (>= 2)"),
      FC_REAL("epsilon", train.epsilon, kCluster, "smoothing offset"),
      FC_REAL("dof", train.dof, kCluster, "Student's t degrees of freedom"),
      FC_REAL("lr", train.lr, kCluster, "clustering learning rate"),
      FC_REAL("momentum", train.momentum, kFit, "SGD momentum (pretraining and clustering)"),
      FC_COUNT("batch", train.batch, kFit, "minibatch size"),
      FC_COUNT("max_epochs", train.max_epochs, kCluster, "clustering epoch cap"),
      FC_REAL("convergence_tol", train.convergence_tol, kCluster, "stop below this fraction of changed labels"),
      FC_REAL("recon_weight", train.recon_weight, kCluster, "weight of the reconstruction term"),
      FC_COUNT("kmeans_restarts", train.kmeans_restarts, kCluster, "k-means++ restarts for initial centroids"),
      FC_COUNT("lloyd_iters", train.lloyd_iters, kCluster, "Lloyd iterations per restart"),
      ConfigField{"refresh", "in-core | streaming", kCluster,
                  [](RunConfig& c, const std::string& v) {
                    try {
                      c.train.refresh = refresh_mode_from_string(trim(v));
                    } catch (const std::invalid_argument& e) {
                      throw ConfigError(std::string("refresh: ") + e.what());
                    }
                  },
                  [](const RunConfig& c) { return std::string(to_string(c.train.refresh)); }},
      ConfigField{"seeds", "comma-separated run seeds", kCluster,
                  [](RunConfig& c, const std::string& v) {
                    c.seeds = parse_list<std::uint64_t>(
                        v, [](const std::string& s) { return parse_number<std::uint64_t>("seeds", s); });
                  },
                  [](const RunConfig& c) { return join(c.seeds); }},

      FC_STRING("model", model, kCmdEval, "trained model checkpoint"),
      ConfigField{"metric", "discrete | ordinal ground metric for FWD", kCluster | kCmdEval,
                  [](RunConfig& c, const std::string& v) {
                    try {
                      c.metric = ground_metric_from_string(trim(v));
                    } catch (const std::invalid_argument& e) {
                      throw ConfigError(std::string("metric: ") + e.what());
                    }
                  },
                  [](const RunConfig& c) { return std::string(to_string(c.metric)); }},

      ConfigField{"sweep_gamma", "gamma values to sweep", kCmdSweep,
                  [](RunConfig& c, const std::string& v) {
                    c.sweep_gamma = parse_list<double>(v, [](const std::string& s) { return parse_real("sweep_gamma", s); });
                  },
                  [](const RunConfig& c) { return join(c.sweep_gamma); }},
      ConfigField{"sweep_k", "cluster counts to sweep", kCmdSweep,
                  [](RunConfig& c, const std::string& v) {
                    c.sweep_k = parse_list<std::size_t>(v, [](const std::string& s) { return parse_count("sweep_k", s); });
                  },
                  [](const RunConfig& c) { return join(c.sweep_k); }},
  };
  return f;
}

#undef FC_STRING
#undef FC_REAL
#undef FC_COUNT
#undef FC_LIST

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

std::string canonical_key(std::string_view key) {
  std::string k = trim(key);
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

void apply_setting(RunConfig& cfg, std::string_view key, const std::string& value) {
  const std::string k = canonical_key(key);
  for (const auto& f : config_fields()) {
    if (f.key == k) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text, const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  for (const auto& [key, value] : parse_config_text(buf.str(), path.string())) {
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
}

std::vector<Eigen::Index> RunConfig::ae_dims(Eigen::Index input_dim) const {
  std::vector<Eigen::Index> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(static_cast<Eigen::Index>(latent == 0 ? train.k : latent));
  return dims;
}

AeConfig RunConfig::ae_config(Eigen::Index input_dim, std::uint64_t seed) const {
  AeConfig a;
  a.dims = ae_dims(input_dim);
  a.layerwise_epochs = layerwise_epochs;
  a.global_epochs = global_epochs;
  a.lr_pretrain = lr_pretrain;
  a.momentum = train.momentum;
  a.dropout = dropout;
  a.batch = train.batch;
  a.init_std = init_std;
  a.seed = seed;
  return a;
}

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

CsvSchema RunConfig::csv_schema() const {
  if (protected_column.empty()) {
    if (auto s = schema_from_manifest(data)) return *s;
    throw ConfigError("no protected column given and " + manifest_path_for(data).string() + " not found");
  }
  CsvSchema s;
  s.set(protected_column, ColumnRole::kProtected);
  if (!label.empty()) s.set(label, ColumnRole::kLabel);
  for (const auto& c : categorical) s.set(c, ColumnRole::kCategorical);
  for (const auto& c : ignore) s.set(c, ColumnRole::kIgnore);
  s.protected_levels = protected_levels;
  s.label_levels = label_levels;
  return s;
}

void RunConfig::validate(Command cmd) const {
  auto wrap = [](const auto& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  if (out.empty()) throw ConfigError("--out is required");
  if (cmd == kCmdSynth) {
    wrap([&] { synth.validate(); });
    return;
  }
  if (data.empty()) throw ConfigError("--data is required");
  if (cmd == kCmdEval) {
    if (model.empty()) throw ConfigError("eval: --model is required");
    return;
  }
  if (train.k < 2) throw ConfigError("k must be at least 2");
  wrap([&] { ae_config(1, 0).validate(); });
  for (const auto w : hidden) {
    if (w <= 0) throw ConfigError("hidden widths must be positive");
  }
  if (cmd == kCmdPretrain) return;

  wrap([&] { train.validate(); });
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  {
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("seeds: duplicate seed");
  }
  if (pretrain != "checkpoint" && pretrain != "inline") {
    throw ConfigError("pretrain must be 'checkpoint' or 'inline', got '" + pretrain + "'");
  }
  if (cmd == kCmdTrain && pretrain == "checkpoint" && ae.empty()) {
    throw ConfigError("train: --ae checkpoint is required unless --pretrain inline");
  }
  if (cmd == kCmdSweep) {
    if (sweep_gamma.empty() == sweep_k.empty()) {
      throw ConfigError("sweep: give exactly one axis (--gamma list or --k list)");
    }
    for (const double g : sweep_gamma) {
      if (!(g >= 0.0)) throw ConfigError("sweep: gamma values must be non-negative");
    }
    for (const auto k : sweep_k) {
      if (k < 2) throw ConfigError("sweep: k values must be at least 2");
    }
  }
}

nlohmann::json RunConfig::to_json(Command cmd) const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : config_fields()) {
    if (f.commands & cmd) j[f.key] = f.get(*this);
  }
  return j;
}

}  // namespace fairclust
