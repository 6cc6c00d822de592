#include "sns3d/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sns3d {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(u);
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected on/off, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_uint(key, item)));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "nu") {
    cfg.sim.nu = parse_double(key, value);
  } else if (key == "truncation.k_max") {
    const auto k = parse_uint(key, value);
    if (k < 1) throw ConfigError("key 'truncation.k_max': must be >= 1");
    cfg.sim.truncation = Truncation::make(static_cast<int>(k));
  } else if (key == "dt") {
    cfg.sim.dt = parse_double(key, value);
  } else if (key == "t_burn") {
    cfg.sim.t_burn = parse_double(key, value);
  } else if (key == "t_sample") {
    cfg.sim.t_sample = parse_double(key, value);
  } else if (key == "sample_stride") {
    cfg.sim.sample_stride = parse_uint(key, value);
  } else if (key == "scheme") {
    if (value == "exp_euler") cfg.sim.scheme = Scheme::exp_euler;
    else if (value == "semi_implicit") cfg.sim.scheme = Scheme::semi_implicit;
    else throw ConfigError("key 'scheme': expected exp_euler or semi_implicit, got '" + value + "'");
  } else if (key == "dynamics.nonlinear") {
    cfg.sim.nonlinear = parse_bool(key, value);
  } else if (key == "ensemble.size") {
    cfg.sim.ensemble_size = parse_uint(key, value);
  } else if (key == "rng.seed") {
    cfg.sim.seed = parse_uint(key, value);
  } else if (key == "forcing.family") {
    if (value == "power_law") cfg.family = ForcingFamily::power_law;
    else if (value == "gevrey") cfg.family = ForcingFamily::gevrey;
    else throw ConfigError("key 'forcing.family': expected power_law or gevrey, got '" + value + "'");
  } else if (key == "forcing.r") {
    cfg.forcing_r = parse_double(key, value);
  } else if (key == "forcing.alpha") {
    cfg.forcing_alpha = parse_double(key, value);
  } else if (key == "forcing.beta") {
    cfg.forcing_beta = parse_double(key, value);
  } else if (key == "forcing.amplitude") {
    cfg.forcing_amplitude = parse_double(key, value);
  } else if (key == "analysis.p") {
    cfg.analysis.p_list = parse_int_list(key, value);
  } else if (key == "analysis.gevrey.alpha_prime") {
    cfg.analysis.alpha_prime = parse_double(key, value);
  } else if (key == "analysis.gevrey.beta_prime") {
    cfg.analysis.beta_prime = parse_double(key, value);
  } else if (key == "analysis.gamma") {
    cfg.analysis.gamma = parse_double(key, value);
  } else if (key == "analysis.tau") {
    cfg.analysis.tau = parse_bool(key, value);
  } else if (key == "analysis.alpha_nu") {
    cfg.analysis.alpha_nu = parse_bool(key, value);
  } else if (key == "analysis.horizon") {
    cfg.analysis.horizon = parse_double(key, value);
  } else if (key == "output.dir") {
    cfg.output_dir = value;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(source_name + ":" + std::to_string(lineno) +
                        ": empty key or value");
    try {
      apply_config_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path);
}

ForcingSpec ExperimentConfig::make_forcing() const {
  if (!sim.truncation) throw ConfigError("truncation.k_max is not set");
  if (family == ForcingFamily::gevrey)
    return ForcingSpec::gevrey(sim.truncation, forcing_r, forcing_amplitude,
                               GevreyParams{forcing_alpha, forcing_beta});
  return ForcingSpec::power_law(sim.truncation, forcing_r, forcing_amplitude);
}

void ExperimentConfig::validate() const {
  try {
    sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(forcing_r > 0.0)) throw ConfigError("forcing.r must be > 0");
  if (!(forcing_amplitude >= 0.0)) throw ConfigError("forcing.amplitude must be >= 0");
  if (family == ForcingFamily::gevrey) {
    if (!(forcing_alpha > 0.0)) throw ConfigError("forcing.alpha must be > 0");
    if (!(forcing_beta > 0.0 && forcing_beta <= 1.0))
      throw ConfigError("forcing.beta must be in (0,1]");
    if (analysis.beta_prime >= forcing_beta)
      throw ConfigError("analysis.gevrey.beta_prime must be < forcing.beta");
  }
  for (int p : analysis.p_list)
    if (p < 1) throw ConfigError("analysis.p entries must be >= 1");
  if (!(analysis.alpha_prime > 0.0))
    throw ConfigError("analysis.gevrey.alpha_prime must be > 0");
  if (!(analysis.beta_prime > 0.0))
    throw ConfigError("analysis.gevrey.beta_prime must be > 0");
  if (!(analysis.gamma > 0.0)) throw ConfigError("analysis.gamma must be > 0");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "nu = " << fmt_double(cfg.sim.nu) << "\n";
  os << "truncation.k_max = "
     << (cfg.sim.truncation ? cfg.sim.truncation->k_max() : 0) << "\n";
  os << "dt = " << fmt_double(cfg.sim.dt) << "\n";
  os << "t_burn = " << fmt_double(cfg.sim.burn_time()) << "\n";
  os << "t_sample = " << fmt_double(cfg.sim.t_sample) << "\n";
  os << "sample_stride = " << cfg.sim.sample_stride << "\n";
  os << "scheme = "
     << (cfg.sim.scheme == Scheme::exp_euler ? "exp_euler" : "semi_implicit") << "\n";
  os << "dynamics.nonlinear = " << (cfg.sim.nonlinear ? "on" : "off") << "\n";
  os << "ensemble.size = " << cfg.sim.ensemble_size << "\n";
  os << "rng.seed = " << cfg.sim.seed << "\n";
  os << "forcing.family = "
     << (cfg.family == ForcingFamily::gevrey ? "gevrey" : "power_law") << "\n";
  os << "forcing.r = " << fmt_double(cfg.forcing_r) << "\n";
  if (cfg.family == ForcingFamily::gevrey) {
    os << "forcing.alpha = " << fmt_double(cfg.forcing_alpha) << "\n";
    os << "forcing.beta = " << fmt_double(cfg.forcing_beta) << "\n";
  }
  os << "forcing.amplitude = " << fmt_double(cfg.forcing_amplitude) << "\n";
  os << "analysis.p = ";
  for (std::size_t i = 0; i < cfg.analysis.p_list.size(); ++i)
    os << (i ? "," : "") << cfg.analysis.p_list[i];
  os << "\n";
  os << "analysis.gevrey.alpha_prime = " << fmt_double(cfg.analysis.alpha_prime) << "\n";
  os << "analysis.gevrey.beta_prime = " << fmt_double(cfg.analysis.beta_prime) << "\n";
  os << "analysis.gamma = " << fmt_double(cfg.analysis.gamma) << "\n";
  os << "analysis.tau = " << (cfg.analysis.tau ? "on" : "off") << "\n";
  os << "analysis.alpha_nu = " << (cfg.analysis.alpha_nu ? "on" : "off") << "\n";
  os << "analysis.horizon = " << fmt_double(cfg.tau_horizon()) << "\n";
  // output.dir is a run location, not part of the experiment identity
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a_str(config_echo(*this)); }

std::uint64_t ExperimentConfig::forcing_hash() const {
  std::ostringstream os;
  os << (family == ForcingFamily::gevrey ? "gevrey" : "power_law") << ";"
     << fmt_double(forcing_r) << ";" << fmt_double(forcing_amplitude);
  if (family == ForcingFamily::gevrey)
    os << ";" << fmt_double(forcing_alpha) << ";" << fmt_double(forcing_beta);
  return fnv1a_str(os.str());
}

}  // namespace sns3d
