#pragma once

// Batch experiment runner behind the CLI and the C API: one entry point
// per workflow, CSV/JSON emission, deterministic outputs for a fixed seed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sns3d/config.hpp"

namespace sns3d {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> resume_checkpoint;
  int threads = 1;
};

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct RunReport {
  bool ok = true;           // all checks passed and no blow-up
  bool blew_up = false;
  std::vector<CheckResult> checks;
  std::string summary_json;
  std::vector<std::string> files;
};

inline constexpr const char* kSubcommands[] = {
    "simulate", "ou-validate", "moments", "gevrey", "kolmogorov", "dissipation"};

// Runs one subcommand; writes output files under the configured directory.
// Throws ConfigError / CheckpointError / std::invalid_argument on bad
// input; blow-ups are reported in the result, not thrown.
RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::string& subcommand,
                         const RunOptions& options);

const char* version_string();

}  // namespace sns3d
