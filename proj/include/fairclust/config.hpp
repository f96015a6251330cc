#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fairclust/autoencoder.hpp"
#include "fairclust/dataset.hpp"
#include "fairclust/fair_dec.hpp"
#include "fairclust/metrics.hpp"

namespace fairclust {

/// Bad configuration: unknown key, malformed value, or an invalid combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum Command : unsigned {
  kCmdSynth = 1u << 0,
  kCmdPretrain = 1u << 1,
  kCmdTrain = 1u << 2,
  kCmdEval = 1u << 3,
  kCmdSweep = 1u << 4,
};

const char* command_name(Command c);

/// Everything a command can be told. Defaults follow the published recipe
/// (500-500-2000 hidden widths, 150 + 100 pretraining epochs, lr 0.1 / 0.01,
/// dropout 0.2, batch 256, beta 1000).
struct RunConfig {
  std::string out;

  std::string data;
  std::string label;
  std::string protected_column;
  std::vector<std::string> categorical;
  std::vector<std::string> ignore;
  std::vector<std::string> protected_levels;
  std::vector<std::string> label_levels;
  NormMode norm = NormMode::kMinMax;

  SynthSpec synth;

  std::vector<Eigen::Index> hidden = {500, 500, 2000};
  std::size_t latent = 0;  // 0: same as k
  std::size_t layerwise_epochs = 150;
  std::size_t global_epochs = 100;
  double lr_pretrain = 0.1;
  double dropout = 0.2;
  double init_std = 0.0;
  std::uint64_t ae_seed = 0;
  std::string ae;                 // pretrained checkpoint
  std::string pretrain = "checkpoint";  // or "inline"

  TrainConfig train;
  std::vector<std::uint64_t> seeds = {0};

  std::string model;
  GroundMetric metric = GroundMetric::kDiscrete;

  std::vector<double> sweep_gamma;
  std::vector<std::size_t> sweep_k;

  /// Layer widths for an input of width `input_dim`.
  [[nodiscard]] std::vector<Eigen::Index> ae_dims(Eigen::Index input_dim) const;
  [[nodiscard]] AeConfig ae_config(Eigen::Index input_dim, std::uint64_t seed) const;
  [[nodiscard]] TrainConfig train_config(std::uint64_t seed) const;
  /// Schema from the column flags, or from the dataset's sidecar manifest
  /// when no protected column was named.
  [[nodiscard]] CsvSchema csv_schema() const;

  /// Cross-field checks for one command. Throws ConfigError.
  void validate(Command cmd) const;

  /// All keys relevant to `cmd`, as strings, in registry order.
  [[nodiscard]] nlohmann::json to_json(Command cmd) const;
};

struct ConfigField {
  std::string key;
  std::string help;
  unsigned commands;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigField>& config_fields();

/// "layerwise-epochs" and "layerwise_epochs" name the same key.
std::string canonical_key(std::string_view key);

/// Sets one key from its text form. Throws ConfigError on unknown keys and
/// unparseable values.
void apply_setting(RunConfig& cfg, std::string_view key, const std::string& value);

/// `key = value` lines; `#` starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   const std::string& source = "config");

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace fairclust
