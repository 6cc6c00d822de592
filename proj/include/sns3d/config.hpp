#pragma once

// Experiment configuration: a flat key-value text format with dotted keys
// (diff-friendly, language-neutral), parsed with line/key diagnostics.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sns3d/dynamics.hpp"
#include "sns3d/integrator.hpp"

namespace sns3d {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct AnalysisConfig {
  std::vector<int> p_list{1};
  double alpha_prime = 0.1;
  double beta_prime = 0.5;
  double gamma = 0.25;
  bool tau = true;
  bool alpha_nu = true;
  double horizon = -1.0;  // < 0 means t_sample
};

struct ExperimentConfig {
  SimConfig sim;
  ForcingFamily family = ForcingFamily::power_law;
  double forcing_r = 1.0;
  double forcing_alpha = 0.3;
  double forcing_beta = 1.0;
  double forcing_amplitude = 1.0;
  AnalysisConfig analysis;
  std::string output_dir = "out";

  ForcingSpec make_forcing() const;
  double tau_horizon() const {
    return analysis.horizon < 0 ? sim.t_sample : analysis.horizon;
  }
  // semantic validation beyond parsing; throws ConfigError with key names
  void validate() const;
  std::uint64_t hash() const;          // covers the full canonical echo
  std::uint64_t forcing_hash() const;  // forcing family + parameters only
};

// Format: one `key = value` per line, `#` comments, blank lines ignored.
// Unknown keys and malformed values are reported with file:line.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

// Applies one key=value assignment (same keys as the file format).
void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

std::string config_echo(const ExperimentConfig& cfg);  // canonical key=value dump

}  // namespace sns3d
