#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fairclust/commands.hpp"
#include "fairclust/config.hpp"
#include "test_util.hpp"

namespace fairclust {
namespace {

struct Values {
  std::string file;
  std::string flag;
};

// Two distinct valid settings per key, neither equal to the default.
const std::map<std::string, Values>& sample_values() {
  static const std::map<std::string, Values> v{
      {"out", {"from_file", "from_flag"}},
      {"data", {"a.csv", "b.csv"}},
      {"label", {"y", "z"}},
      {"protected", {"g", "h"}},
      {"categorical", {"a,b", "c"}},
      {"ignore", {"id", "name,row"}},
      {"protected_levels", {"m,f", "f,m"}},
      {"label_levels", {"x,y", "y,x"}},
      {"norm", {"zscore", "none"}},
      {"n", {"10", "20"}},
      {"dims", {"3", "4"}},
      {"blobs", {"2", "3"}},
      {"t", {"3", "5"}},
      {"corr", {"0.25", "0.75"}},
      {"spread", {"0.3", "0.4"}},
      {"seed", {"5", "6"}},
      {"hidden", {"8,8", "16"}},
      {"latent", {"3", "4"}},
      {"layerwise_epochs", {"2", "3"}},
      {"global_epochs", {"4", "5"}},
      {"lr_pretrain", {"0.2", "0.3"}},
      {"dropout", {"0.1", "0.3"}},
      {"init_std", {"0.05", "0.02"}},
      {"ae_seed", {"7", "8"}},
      {"ae", {"x.json", "y.json"}},
      {"pretrain", {"inline", "checkpoint"}},
      {"k", {"3", "5"}},
      {"gamma", {"2", "3.5"}},
      {"beta", {"10", "20"}},
      {"epsilon", {"1e-06", "1e-07"}},
      {"dof", {"2", "3"}},
      {"lr", {"0.02", "0.03"}},
      {"momentum", {"0.5", "0.6"}},
      {"batch", {"32", "64"}},
      {"max_epochs", {"7", "9"}},
      {"convergence_tol", {"0.01", "0.02"}},
      {"recon_weight", {"0.1", "0.2"}},
      {"kmeans_restarts", {"2", "3"}},
      {"lloyd_iters", {"5", "6"}},
      {"refresh", {"streaming", "in-core"}},
      {"seeds", {"1,2", "3"}},
      {"model", {"m1.json", "m2.json"}},
      {"metric", {"ordinal", "discrete"}},
      {"sweep_gamma", {"0.1,1", "5"}},
      {"sweep_k", {"2,3", "4"}},
  };
  return v;
}

Command command_for(const ConfigField& f) {
  for (const Command c : {kCmdTrain, kCmdSynth, kCmdPretrain, kCmdEval, kCmdSweep}) {
    if (f.commands & c) return c;
  }
  return kCmdTrain;
}

std::string flag_for(const std::string& key) {
  if (key == "sweep_gamma") return "--gamma";
  if (key == "sweep_k") return "--k";
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

// Flags needed for the command to validate, minus the key under test.
std::vector<std::string> base_args(Command cmd, const std::string& skip) {
  std::vector<std::pair<std::string, std::string>> req{{"out", "o"}};
  if (cmd != kCmdSynth) req.emplace_back("data", "d.csv");
  if (cmd == kCmdTrain) req.emplace_back("ae", "a.json");
  if (cmd == kCmdEval) req.emplace_back("model", "m.json");
  if (cmd == kCmdSweep && skip != "sweep_gamma" && skip != "sweep_k") req.emplace_back("sweep_gamma", "1");
  std::vector<std::string> args{command_name(cmd)};
  for (const auto& [k, v] : req) {
    if (k == skip) continue;
    args.push_back(flag_for(k));
    args.push_back(v);
  }
  return args;
}

std::string normalised(const ConfigField& f, const std::string& text) {
  RunConfig c;
  f.set(c, text);
  return f.get(c);
}

TEST(ConfigPrecedence, EveryKeyHasSampleValues) {
  std::set<std::string> keys;
  for (const auto& f : config_fields()) {
    keys.insert(f.key);
    EXPECT_TRUE(sample_values().count(f.key)) << f.key;
  }
  EXPECT_EQ(keys.size(), sample_values().size());
}

TEST(ConfigPrecedence, FlagBeatsFileBeatsDefault) {
  const auto dir = testing::scratch_dir();
  for (const auto& f : config_fields()) {
    const auto& vals = sample_values().at(f.key);
    const Command cmd = command_for(f);
    SCOPED_TRACE(f.key + " via " + command_name(cmd));
    const auto file = dir / (f.key + ".conf");
    testing::write_text(file, "# sample\n" + f.key + " = " + vals.file + "\n");

    const std::string def = f.get(RunConfig{});
    ASSERT_NE(normalised(f, vals.file), def);
    ASSERT_NE(normalised(f, vals.flag), normalised(f, vals.file));

    auto args = base_args(cmd, f.key);
    const bool required = args.size() != base_args(cmd, "").size() || f.key.starts_with("sweep_");
    if (!required) {
      EXPECT_EQ(f.get(resolve_command_line(args)), def);
    }

    args.push_back("--config");
    args.push_back(file.string());
    EXPECT_EQ(f.get(resolve_command_line(args)), normalised(f, vals.file));

    args.push_back(flag_for(f.key));
    args.push_back(vals.flag);
    EXPECT_EQ(f.get(resolve_command_line(args)), normalised(f, vals.flag));
  }
}

TEST(ConfigPrecedence, SetSitsBetweenFileAndFlag) {
  const auto file = testing::scratch_dir() / "c.conf";
  testing::write_text(file, "gamma = 1\nbeta = 50\n");
  auto args = base_args(kCmdTrain, "");
  args.insert(args.end(), {"--config", file.string(), "--set", "gamma=2", "--set", "beta=60"});
  RunConfig cfg = resolve_command_line(args);
  EXPECT_EQ(cfg.train.gamma, 2.0);
  EXPECT_EQ(cfg.train.beta, 60.0);
  args.insert(args.end(), {"--gamma", "3"});
  cfg = resolve_command_line(args);
  EXPECT_EQ(cfg.train.gamma, 3.0);
  EXPECT_EQ(cfg.train.beta, 60.0);
}

TEST(ConfigFile, UnknownKeyIsAnError) {
  const auto file = testing::scratch_dir() / "c.conf";
  testing::write_text(file, "gamma = 1\ncolour = blue\n");
  auto args = base_args(kCmdTrain, "");
  args.insert(args.end(), {"--config", file.string()});
  try {
    resolve_command_line(args);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos) << e.what();
  }
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "colour", "blue"), ConfigError);
}

TEST(ConfigFile, MalformedLineNamesLineNumber) {
  try {
    parse_config_text("gamma = 1\n\n# note\njust words\n", "x.conf");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.conf:4"), std::string::npos) << e.what();
  }
}

TEST(ConfigFile, CommentsBlankLinesAndDashedKeys) {
  const auto kv = parse_config_text("\xEF\xBB\xBF# header\n\nmax-epochs = 12   # trailing\n  lr=0.5\n");
  ASSERT_EQ(kv.size(), 2u);
  RunConfig cfg;
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
  EXPECT_EQ(cfg.train.max_epochs, 12u);
  EXPECT_EQ(cfg.train.lr, 0.5);
}

TEST(ConfigValues, MalformedValuesRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "gamma", "lots"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "batch", "-3"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "batch", "2.5"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "norm", "log"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "gamma", "nan"), ConfigError);
}

TEST(ConfigValidate, CrossFieldChecks) {
  auto expect_usage = [](std::vector<std::string> args) {
    EXPECT_THROW(resolve_command_line(args), ConfigError) << args[0];
  };
  expect_usage({"train", "--data", "d.csv", "--ae", "a.json"});                   // no --out
  expect_usage({"train", "--out", "o", "--ae", "a.json"});                        // no --data
  expect_usage({"train", "--out", "o", "--data", "d.csv"});                       // no --ae
  expect_usage({"eval", "--out", "o", "--data", "d.csv"});                        // no --model
  expect_usage({"sweep", "--out", "o", "--data", "d.csv"});                       // no axis
  expect_usage({"sweep", "--out", "o", "--data", "d.csv", "--gamma", "1", "--k", "2,4"});
  expect_usage({"synth", "--out", "o", "--corr", "1.5"});
  expect_usage({"train", "--out", "o", "--data", "d.csv", "--ae", "a", "--seeds", "1,1"});
  expect_usage({"train", "--out", "o", "--data", "d.csv", "--ae", "a", "--beta", "1"});
  expect_usage({"train", "--out", "o", "--data", "d.csv", "--ae", "a", "--pretrain", "sometimes"});
  expect_usage({"synth", "--out", "o", "--gamma", "1"});  // not a synth flag
  expect_usage({"fly"});
  EXPECT_NO_THROW(resolve_command_line({"train", "--out", "o", "--data", "d.csv", "--pretrain", "inline"}));
}

TEST(ConfigJson, ManifestConfigListsCommandKeys) {
  RunConfig cfg;
  cfg.train.gamma = 0.1;
  const auto j = cfg.to_json(kCmdTrain);
  EXPECT_EQ(j.at("gamma"), "0.1");
  EXPECT_TRUE(j.contains("seeds"));
  EXPECT_FALSE(j.contains("corr"));
  EXPECT_FALSE(j.contains("model"));
}

TEST(RunConfigDims, LatentDefaultsToK) {
  RunConfig cfg;
  cfg.train.k = 6;
  EXPECT_EQ(cfg.ae_dims(10), (std::vector<Eigen::Index>{10, 500, 500, 2000, 6}));
  cfg.latent = 3;
  cfg.hidden = {8};
  EXPECT_EQ(cfg.ae_dims(10), (std::vector<Eigen::Index>{10, 8, 3}));
}

}  // namespace
}  // namespace fairclust
