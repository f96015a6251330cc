#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairclust/config.hpp"

namespace fairclust {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr int kArtifactSchemaVersion = 1;

/// Entry point of the `fairclust` tool. Never throws; returns an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses a command line and applies default, config file, --set and flag
/// values in that order. Throws ConfigError on any usage problem.
RunConfig resolve_command_line(const std::vector<std::string>& args, Command* cmd = nullptr);

// The commands below expect a validated config and throw on failure. Each
// writes its artifacts plus a manifest.json index under cfg.out.

void cmd_synth(const RunConfig& cfg);
void cmd_pretrain(const RunConfig& cfg);
/// Returns false when some seed failed (results of the others are kept).
bool cmd_train(const RunConfig& cfg);
MetricsReport cmd_eval(const RunConfig& cfg);
/// Returns false when some sweep point failed.
bool cmd_sweep(const RunConfig& cfg);

/// mean, median, sample std and the per-seed values of each metric.
nlohmann::json aggregate_metrics(const std::vector<MetricsReport>& reports);

/// Worker count from FAIRCLUST_THREADS (default 1, at least 1).
unsigned thread_budget();

}  // namespace fairclust
