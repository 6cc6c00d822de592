#pragma once

// Time discretization of the Galerkin system. The viscous part is handled
// exactly per mode; the default exp_euler scheme uses the exact stochastic
// convolution variance of the per-mode Ornstein-Uhlenbeck step so linear
// statistics carry no dt bias.

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sns3d/dynamics.hpp"
#include "sns3d/rng.hpp"
#include "sns3d/spectral.hpp"

namespace sns3d {

enum class Scheme : std::uint8_t { exp_euler = 0, semi_implicit = 1 };

struct SimConfig {
  double nu = 0.5;  // viscosity, in (0,1]
  std::shared_ptr<const Truncation> truncation;
  double dt = 0.01;
  double t_burn = -1.0;  // < 0 means the default 10/nu
  double t_sample = 100.0;
  std::uint64_t sample_stride = 10;
  Scheme scheme = Scheme::exp_euler;
  bool nonlinear = true;
  std::uint64_t seed = 1;
  std::uint64_t ensemble_size = 1;

  double burn_time() const { return t_burn < 0 ? 10.0 / nu : t_burn; }
  // dt nu k_max^2; above ~2 the semi-implicit scheme is over-damped
  double stability_number() const;
  void validate() const;  // throws std::invalid_argument
};

// hash of the dynamics-defining fields (nu, k_max, dt, scheme, nonlinear,
// seed, ensemble_size), mixed with an optional caller-supplied word
std::uint64_t sim_config_hash(const SimConfig& cfg, std::uint64_t extra = 0);

struct TrajectoryState {
  SpectralField field;
  double time = 0.0;
  RngStream rng;
};

// zero field at t=0 with the member's derived stream
TrajectoryState initial_state(const SimConfig& cfg, std::uint64_t member = 0);

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, double last_norm,
              std::shared_ptr<TrajectoryState> last_state);
  double time() const { return time_; }
  double last_norm() const { return last_norm_; }
  // last finite state, for post-mortem checkpointing
  const std::shared_ptr<TrajectoryState>& last_state() const { return last_state_; }

 private:
  double time_;
  double last_norm_;
  std::shared_ptr<TrajectoryState> last_state_;
};

// One step of the configured scheme. Throws BlowUpError when a non-finite
// coefficient appears.
TrajectoryState step(TrajectoryState state, const SimConfig& cfg,
                     const ForcingSpec& spec);

struct SampleFrame {
  const TrajectoryState& state;
  double window_time = 0.0;     // time since the sampling window opened
  std::uint64_t index = 0;      // frame counter, 0 at the window start
};
using SampleObserver = std::function<void(const SampleFrame&)>;

struct SimulateSummary {
  std::uint64_t burn_steps = 0;
  std::uint64_t sample_steps = 0;
  std::uint64_t frames = 0;
  double wall_seconds = 0.0;
  TrajectoryState final_state;
};

// Burn-in then sampling window; observers fire at the window start and
// every sample_stride steps after. Fully reproducible from (seed, member).
// resume_from, when given, continues a saved state to the configured end.
SimulateSummary simulate(const SimConfig& cfg, const ForcingSpec& spec,
                         const std::vector<SampleObserver>& observers,
                         std::uint64_t member = 0,
                         const TrajectoryState* resume_from = nullptr);

// Ensemble members run on up to `threads` workers with independent streams
// derived from (seed, member). Observers are created per member; results
// are reported in member order so merges are deterministic.
std::vector<SimulateSummary> run_ensemble(
    const SimConfig& cfg, const ForcingSpec& spec,
    const std::function<std::vector<SampleObserver>(std::uint64_t member)>&
        make_observers,
    int threads = 1);

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Little-endian binary checkpoint: magic "SNS3", version u16, config-hash
// u64, nu f64, k_max u32, scheme u8, time f64, rng blob (u32 length +
// bytes), mode count u64, then per representative mode k as 3 x i32 and the
// coefficient as 6 x f64. Round trips are bit-exact, including the stream.
void save_checkpoint(const TrajectoryState& state, const SimConfig& cfg,
                     const std::string& path, std::uint64_t extra_hash = 0);

struct CheckpointData {
  double nu = 0.0;
  int k_max = 0;
  Scheme scheme = Scheme::exp_euler;
  std::uint64_t config_hash = 0;
  TrajectoryState state;
};
CheckpointData load_checkpoint(const std::string& path);

// Throws CheckpointError unless the stored hash matches cfg (+extra).
TrajectoryState load_checkpoint_for_resume(const std::string& path,
                                           const SimConfig& cfg,
                                           std::uint64_t extra_hash = 0);

}  // namespace sns3d
