#include "fairclust/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "fairclust/checkpoint.hpp"

namespace fairclust {

using nlohmann::json;
namespace fs = std::filesystem;

unsigned thread_budget() {
  const char* v = std::getenv("FAIRCLUST_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

namespace {

/// Files written under one --out directory, for manifest.json.
class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  [[nodiscard]] const fs::path& root() const { return root_; }

  void json_file(const fs::path& rel, const json& j) {
    ensure_parent(rel);
    write_json_file(root_ / rel, j);
    add(rel);
  }

  void text_file(const fs::path& rel, const std::string& text) {
    ensure_parent(rel);
    std::ofstream out(root_ / rel, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root_ / rel).string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + (root_ / rel).string());
    add(rel);
  }

  void add(const fs::path& rel) {
    const std::lock_guard lock(mu_);
    files_.push_back(rel.generic_string());
  }

  void write_manifest(Command cmd, const RunConfig& cfg) {
    std::vector<std::string> files = files_;
    std::sort(files.begin(), files.end());
    write_json_file(root_ / "manifest.json", json{{"schema", "fairclust.manifest"},
                                                 {"schema_version", kArtifactSchemaVersion},
                                                 {"command", command_name(cmd)},
                                                 {"config", cfg.to_json(cmd)},
                                                 {"files", files}});
  }

 private:
  void ensure_parent(const fs::path& rel) const {
    if (rel.has_parent_path()) fs::create_directories(root_ / rel.parent_path());
  }

  fs::path root_;
  std::vector<std::string> files_;
  std::mutex mu_;
};

std::string jsonl(const std::vector<json>& lines) {
  std::string s;
  for (const auto& l : lines) s += l.dump() + "\n";
  return s;
}

std::string history_jsonl(const std::vector<EpochRecord>& history) {
  std::vector<json> lines;
  for (const auto& h : history) {
    json j = h.to_json();
    j["schema_version"] = kArtifactSchemaVersion;
    lines.push_back(std::move(j));
  }
  return jsonl(lines);
}

std::string log_jsonl(const TrainLog& log) {
  std::vector<json> lines;
  for (const auto& e : log) {
    json j = e.to_json();
    j["schema_version"] = kArtifactSchemaVersion;
    lines.push_back(std::move(j));
  }
  return jsonl(lines);
}

std::string versioned_csv(const std::string& schema, const std::string& body) {
  return "# schema=" + schema + " version=" + std::to_string(kArtifactSchemaVersion) + "\n" + body;
}

json report_json(const MetricsReport& r) { return r.to_json(); }

struct TrainingData {
  Dataset ds;
  NormStats norm;
};

TrainingData load_training_data(const RunConfig& cfg) {
  TrainingData d;
  d.ds = load_csv(cfg.data, cfg.csv_schema());
  d.ds.validate();
  d.norm = fit_normalizer(d.ds.features, cfg.norm);
  d.ds.features = d.norm.apply(d.ds.features);
  return d;
}

Autoencoder load_autoencoder(const fs::path& path, Eigen::Index input_dim) {
  Autoencoder ae;
  ae.params = load_params(path, &ae.encoder_depth);
  if (ae.encoder_depth == 0 || ae.encoder_depth >= ae.params.depth()) {
    throw std::runtime_error(path.string() + ": invalid encoder depth");
  }
  if (ae.input_dim() != input_dim) {
    throw std::runtime_error("autoencoder " + path.string() + " expects D=" + std::to_string(ae.input_dim()) +
                             " but the dataset has D=" + std::to_string(input_dim));
  }
  return ae;
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport report;
};

SeedResult run_seed(const RunConfig& cfg, const TrainingData& data, const Autoencoder* shared, std::uint64_t seed,
                    Artifacts& art, const fs::path& dir) {
  SeedResult res;
  res.seed = seed;
  try {
    Autoencoder ae;
    if (shared != nullptr) {
      ae = *shared;
    } else {
      TrainLog log;
      ae = pretrain(data.ds.features, cfg.ae_config(static_cast<Eigen::Index>(data.ds.dims()), seed), &log);
      art.json_file(dir / "ae.json", json{{"format", "fairclust.params"},
                                          {"version", kCheckpointVersion},
                                          {"encoder_depth", ae.encoder_depth},
                                          {"params", params_to_json(ae.params)}});
      art.text_file(dir / "pretrain_log.jsonl", log_jsonl(log));
    }
    TrainedModel model = train(data.ds, ae, cfg.train_config(seed));
    model.norm = data.norm;
    res.report = report(model, data.ds, cfg.metric);
    art.json_file(dir / "model.json", model.to_json());
    art.text_file(dir / "history.jsonl", history_jsonl(model.history));
    art.json_file(dir / "report.json", report_json(res.report));
    art.text_file(dir / "histograms.csv", versioned_csv("fairclust.histograms", res.report.histograms_csv()));
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

std::vector<SeedResult> run_seeds(const RunConfig& cfg, const TrainingData& data, const Autoencoder* shared,
                                  Artifacts& art, const fs::path& base) {
  std::vector<SeedResult> results(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      const auto seed = cfg.seeds[i];
      results[i] = run_seed(cfg, data, shared, seed, art, base / ("seed_" + std::to_string(seed)));
    }
  };
  const unsigned workers = std::min<unsigned>(thread_budget(), static_cast<unsigned>(cfg.seeds.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

json aggregate_json(const std::vector<SeedResult>& results) {
  std::vector<MetricsReport> ok;
  json seeds = json::array();
  json failures = json::array();
  for (const auto& r : results) {
    seeds.push_back(r.seed);
    if (r.ok) {
      ok.push_back(r.report);
    } else {
      failures.push_back(json{{"seed", r.seed}, {"error", r.error}});
    }
  }
  return json{{"schema", "fairclust.aggregate"},
              {"schema_version", kArtifactSchemaVersion},
              {"seeds", seeds},
              {"completed", ok.size()},
              {"failures", failures},
              {"metrics", aggregate_metrics(ok)}};
}

bool all_ok(const std::vector<SeedResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const SeedResult& r) { return r.ok; });
}

}  // namespace

json aggregate_metrics(const std::vector<MetricsReport>& reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports) {
    if (r.acc) values["acc"].push_back(*r.acc);
    if (r.nmi) values["nmi"].push_back(*r.nmi);
    values["fwd_mean"].push_back(r.fwd_mean);
    values["fwd_max"].push_back(r.fwd_max);
    if (r.balance_min) values["balance"].push_back(*r.balance_min);
  }
  json out = json::object();
  for (auto& [name, v] : values) {
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    out[name] = json{{"mean", mean},
                     {"median", median},
                     {"std", m > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0},
                     {"values", v}};
  }
  return out;
}

void cmd_synth(const RunConfig& cfg) {
  Artifacts art(cfg.out);
  const Dataset ds = synth_blobs(cfg.synth);
  export_csv(ds, art.root() / "data.csv");
  art.add("data.csv");
  art.add(manifest_path_for("data.csv"));
  art.write_manifest(kCmdSynth, cfg);
}

void cmd_pretrain(const RunConfig& cfg) {
  const TrainingData data = load_training_data(cfg);
  Artifacts art(cfg.out);
  TrainLog log;
  const Autoencoder ae =
      pretrain(data.ds.features, cfg.ae_config(static_cast<Eigen::Index>(data.ds.dims()), cfg.ae_seed), &log);
  save_params(art.root() / "ae.json", ae.params, ae.encoder_depth);
  art.add("ae.json");
  art.text_file("pretrain_log.jsonl", log_jsonl(log));
  art.write_manifest(kCmdPretrain, cfg);
}

bool cmd_train(const RunConfig& cfg) {
  const TrainingData data = load_training_data(cfg);
  std::optional<Autoencoder> shared;
  if (cfg.pretrain == "checkpoint") shared = load_autoencoder(cfg.ae, static_cast<Eigen::Index>(data.ds.dims()));
  Artifacts art(cfg.out);
  const auto results = run_seeds(cfg, data, shared ? &*shared : nullptr, art, "");
  art.json_file("aggregate.json", aggregate_json(results));
  art.write_manifest(kCmdTrain, cfg);
  return all_ok(results);
}

MetricsReport cmd_eval(const RunConfig& cfg) {
  const TrainedModel model = load_model(cfg.model);
  auto t_mismatch = [&](int t) {
    return std::runtime_error("protected attribute mismatch: model has T=" + std::to_string(model.num_groups) +
                              " but dataset has T=" + std::to_string(t));
  };
  // Protected values are coded in the model's order so that per-state
  // histograms line up with training.
  CsvSchema schema = cfg.csv_schema();
  if (schema.protected_levels.empty()) schema.protected_levels = model.group_levels;
  Dataset ds;
  try {
    ds = load_csv(cfg.data, schema);
  } catch (const DataError&) {
    CsvSchema probe = schema;
    probe.protected_levels.clear();
    const Dataset raw = load_csv(cfg.data, probe);
    if (raw.num_groups != model.num_groups) throw t_mismatch(raw.num_groups);
    throw;
  }
  ds.validate(false);
  if (ds.num_groups != model.num_groups) throw t_mismatch(ds.num_groups);
  if (static_cast<Eigen::Index>(ds.dims()) != model.ae.input_dim()) {
    throw std::runtime_error("feature mismatch: model has D=" + std::to_string(model.ae.input_dim()) +
                             " but dataset has D=" + std::to_string(ds.dims()));
  }
  if (!model.feature_names.empty() && ds.feature_names != model.feature_names) {
    for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
      if (ds.feature_names[i] != model.feature_names[i]) {
        throw std::runtime_error("feature mismatch at column " + std::to_string(i) + ": model has '" +
                                 model.feature_names[i] + "', dataset has '" + ds.feature_names[i] + "'");
      }
    }
  }
  if (model.norm.mode != NormMode::kNone) ds.features = model.norm.apply(ds.features);
  const MetricsReport r = report(model, ds, cfg.metric);
  Artifacts art(cfg.out);
  art.json_file("report.json", report_json(r));
  art.text_file("histograms.csv", versioned_csv("fairclust.histograms", r.histograms_csv()));
  art.write_manifest(kCmdEval, cfg);
  return r;
}

bool cmd_sweep(const RunConfig& cfg) {
  const TrainingData data = load_training_data(cfg);
  Artifacts art(cfg.out);
  Autoencoder shared;
  if (!cfg.ae.empty()) {
    shared = load_autoencoder(cfg.ae, static_cast<Eigen::Index>(data.ds.dims()));
  } else {
    TrainLog log;
    shared = pretrain(data.ds.features, cfg.ae_config(static_cast<Eigen::Index>(data.ds.dims()), cfg.ae_seed), &log);
    save_params(art.root() / "ae.json", shared.params, shared.encoder_depth);
    art.add("ae.json");
    art.text_file("pretrain_log.jsonl", log_jsonl(log));
  }

  const bool by_gamma = !cfg.sweep_gamma.empty();
  const std::string axis = by_gamma ? "gamma" : "k";
  const std::size_t points = by_gamma ? cfg.sweep_gamma.size() : cfg.sweep_k.size();
  static const char* kMetrics[] = {"acc", "nmi", "fwd_mean", "fwd_max", "balance"};

  std::ostringstream csv;
  csv << axis << ",status,completed";
  for (const char* m : kMetrics) csv << ',' << m;
  for (const char* m : kMetrics) csv << ',' << m << "_median";
  csv << '\n';

  json rows = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < points; ++i) {
    RunConfig pc = cfg;
    std::string value;
    if (by_gamma) {
      pc.train.gamma = cfg.sweep_gamma[i];
      value = format_real(pc.train.gamma);
    } else {
      pc.train.k = cfg.sweep_k[i];
      value = std::to_string(pc.train.k);
    }
    const fs::path dir = "point_" + std::to_string(i);
    json row{{"value", by_gamma ? json(pc.train.gamma) : json(pc.train.k)}, {"dir", dir.generic_string()}};
    json agg;
    std::string status = "ok";
    try {
      pc.validate(kCmdSweep);
      const auto results = run_seeds(pc, data, &shared, art, dir);
      agg = aggregate_json(results);
      art.json_file(dir / "aggregate.json", agg);
      if (!all_ok(results)) status = results.size() == agg["failures"].size() ? "failed" : "partial";
    } catch (const std::exception& e) {
      status = "failed";
      row["error"] = e.what();
    }
    ok = ok && status == "ok";
    row["status"] = status;
    row["aggregate"] = agg;
    rows.push_back(row);

    csv << value << ',' << status << ',' << (agg.is_null() ? 0 : agg["completed"].get<std::size_t>());
    for (const char* stat : {"mean", "median"}) {
      for (const char* m : kMetrics) {
        csv << ',';
        if (!agg.is_null() && agg["metrics"].contains(m)) csv << format_real(agg["metrics"][m][stat].get<double>());
      }
    }
    csv << '\n';
  }
  art.text_file("sweep.csv", versioned_csv("fairclust.sweep", csv.str()));
  art.json_file("sweep.json", json{{"schema", "fairclust.sweep"},
                                   {"schema_version", kArtifactSchemaVersion},
                                   {"axis", axis},
                                   {"points", rows}});
  art.write_manifest(kCmdSweep, cfg);
  return ok;
}

namespace {

struct Subcommand {
  explicit Subcommand(Command c) : cmd(c) {}

  Command cmd;
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string*>> flags;  // key -> storage
  std::map<std::string, std::string> storage;
};

std::string flag_name(const std::string& key) {
  if (key == "sweep_gamma") return "--gamma";
  if (key == "sweep_k") return "--k";
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

void register_subcommand(CLI::App& app, Subcommand& sc, const std::string& description) {
  sc.app = app.add_subcommand(command_name(sc.cmd), description);
  sc.app->add_option("--config", sc.config_file, "key = value configuration file");
  sc.app->add_option("--set", sc.sets, "override any key: --set key=value (repeatable)");
  for (const auto& f : config_fields()) {
    if (!(f.commands & sc.cmd)) continue;
    const std::string& key = f.key;
    if (sc.cmd == kCmdSweep && (key == "gamma" || key == "k")) continue;
    sc.app->add_option(flag_name(key), sc.storage[key], f.help);
    sc.flags.emplace_back(key, &sc.storage[key]);
  }
}

RunConfig resolve(const Subcommand& sc) {
  RunConfig cfg;
  if (!sc.config_file.empty()) apply_config_file(cfg, sc.config_file);
  for (const auto& s : sc.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : sc.flags) {
    if (sc.app->count(flag_name(key)) > 0) apply_setting(cfg, key, *value);
  }
  cfg.validate(sc.cmd);
  return cfg;
}

class CommandLine {
 public:
  CommandLine() : app_("Fairness-aware deep embedded clustering") {
    app_.require_subcommand(1);
    for (const Command c : {kCmdSynth, kCmdPretrain, kCmdTrain, kCmdEval, kCmdSweep}) subs_.emplace_back(c);
    register_subcommand(app_, subs_[0], "generate a synthetic blob dataset");
    register_subcommand(app_, subs_[1], "pretrain the stacked denoising autoencoder");
    register_subcommand(app_, subs_[2], "train clustering models over a list of seeds");
    register_subcommand(app_, subs_[3], "evaluate a trained model on a dataset");
    register_subcommand(app_, subs_[4], "sweep gamma or k with a shared pretrained autoencoder");
  }

  /// Throws CLI::ParseError.
  Subcommand& parse(const std::vector<std::string>& args) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app_.parse(reversed);
    for (auto& s : subs_) {
      if (s.app->parsed()) return s;
    }
    throw CLI::RequiredError("a subcommand");
  }

  int exit(const CLI::ParseError& e, std::ostream& out, std::ostream& err) { return app_.exit(e, out, err); }

 private:
  CLI::App app_;
  std::vector<Subcommand> subs_;
};

}  // namespace

RunConfig resolve_command_line(const std::vector<std::string>& args, Command* cmd) {
  CommandLine cl;
  try {
    const Subcommand& sc = cl.parse(args);
    if (cmd) *cmd = sc.cmd;
    return resolve(sc);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CommandLine cl;
  Subcommand* sc = nullptr;
  try {
    sc = &cl.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = cl.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = resolve(*sc);
  } catch (const std::exception& e) {
    err << "fairclust " << command_name(sc->cmd) << ": " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    switch (sc->cmd) {
      case kCmdSynth:
        cmd_synth(cfg);
        return kExitOk;
      case kCmdPretrain:
        cmd_pretrain(cfg);
        return kExitOk;
      case kCmdTrain:
        if (!cmd_train(cfg)) {
          err << "fairclust train: some seeds failed, see " << (fs::path(cfg.out) / "aggregate.json").string() << '\n';
          return kExitRuntime;
        }
        return kExitOk;
      case kCmdEval:
        out << cmd_eval(cfg).to_json().dump(2) << '\n';
        return kExitOk;
      case kCmdSweep:
        if (!cmd_sweep(cfg)) {
          err << "fairclust sweep: some points failed, see " << (fs::path(cfg.out) / "sweep.json").string() << '\n';
          return kExitRuntime;
        }
        return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "fairclust " << command_name(sc->cmd) << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "fairclust " << command_name(sc->cmd) << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace fairclust
