#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "savflow/model.hpp"

namespace savflow {

/// Parsed and validated experiment description. `raw` keeps the full JSON
/// for kind-specific blocks.
struct ExperimentConfig {
  std::string kind;
  nlohmann::json raw;
  std::string out_dir;
};

/// Parse a config file and run every validation that does not require
/// stepping (schema version, kinds, key whitelists, parameter ranges).
/// Throws std::runtime_error with a field path on any problem.
ExperimentConfig load_config(const std::string& path);

/// Validate a JSON document directly (used by `savflow validate`).
void validate_config_json(const nlohmann::json& cfg);

struct ExperimentOutcome {
  bool passed = true;
  std::string summary;  // contents written to summary.txt
};

/// Execute the experiment, write artifacts into cfg.out_dir (created if
/// missing) and return the pass/fail outcome. `threads` bounds the number
/// of worker threads used by parameter sweeps.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// `savflow rates`: aggregate `dt,error[,slope]` CSV files matching a
/// glob pattern into one table with per-interval and fitted slopes.
/// Returns the formatted table; throws on empty match or malformed input.
std::string rates_report(const std::string& glob_pattern);

/// %.17g formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace savflow
