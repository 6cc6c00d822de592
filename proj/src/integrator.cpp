#include "sns3d/integrator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace sns3d {

double SimConfig::stability_number() const {
  const double km = truncation ? truncation->k_max() : 0;
  return dt * nu * km * km;
}

void SimConfig::validate() const {
  if (!(nu > 0.0 && nu <= 1.0))
    throw std::invalid_argument("nu must be in (0,1]");
  if (!truncation) throw std::invalid_argument("truncation is not set");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_sample > 0.0)) throw std::invalid_argument("t_sample must be > 0");
  if (sample_stride == 0) throw std::invalid_argument("sample_stride must be >= 1");
  if (ensemble_size == 0) throw std::invalid_argument("ensemble_size must be >= 1");
}

namespace {

std::uint64_t fnv1a(const unsigned char* data, std::size_t len, std::uint64_t h) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_value(const T& v, std::uint64_t h) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  return fnv1a(buf, sizeof(T), h);
}

}  // namespace

std::uint64_t sim_config_hash(const SimConfig& cfg, std::uint64_t extra) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a_value(cfg.nu, h);
  h = fnv1a_value(static_cast<std::uint32_t>(cfg.truncation->k_max()), h);
  h = fnv1a_value(cfg.dt, h);
  h = fnv1a_value(static_cast<std::uint8_t>(cfg.scheme), h);
  h = fnv1a_value(static_cast<std::uint8_t>(cfg.nonlinear ? 1 : 0), h);
  h = fnv1a_value(cfg.seed, h);
  h = fnv1a_value(cfg.ensemble_size, h);
  h = fnv1a_value(extra, h);
  return h;
}

TrajectoryState initial_state(const SimConfig& cfg, std::uint64_t member) {
  return TrajectoryState{SpectralField(cfg.truncation), 0.0,
                         RngStream::for_member(cfg.seed, member)};
}

BlowUpError::BlowUpError(double time, double last_norm,
                         std::shared_ptr<TrajectoryState> last_state)
    : std::runtime_error("trajectory blew up at t=" + std::to_string(time)),
      time_(time),
      last_norm_(last_norm),
      last_state_(std::move(last_state)) {}

namespace {

// per-mode factors fixed for a (cfg, spec) pair
struct StepKernel {
  double dt = 0.0;
  Scheme scheme = Scheme::exp_euler;
  bool nonlinear = true;
  std::vector<double> decay;      // exp(-nu |k|^2 dt)
  std::vector<double> noise_amp;  // exact OU convolution std (exp_euler)
  std::vector<double> denom_inv;  // 1/(1 + nu |k|^2 dt)  (semi_implicit)
  std::vector<double> sigma;

  StepKernel(const SimConfig& cfg, const ForcingSpec& spec) {
    dt = cfg.dt;
    scheme = cfg.scheme;
    nonlinear = cfg.nonlinear;
    const auto& tr = *cfg.truncation;
    const std::size_t m = tr.representative_count();
    decay.resize(m);
    noise_amp.resize(m);
    denom_inv.resize(m);
    sigma.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double lam = cfg.nu * static_cast<double>(tr.rep_norm2(i));
      const double s = noise_amplitude(spec, tr.rep(i));
      sigma[i] = s;
      decay[i] = std::exp(-lam * dt);
      noise_amp[i] = s * std::sqrt((1.0 - std::exp(-2.0 * lam * dt)) / (2.0 * lam));
      denom_inv[i] = 1.0 / (1.0 + lam * dt);
    }
  }
};

void advance(TrajectoryState& state, const StepKernel& kern,
             const ForcingSpec& spec) {
  const auto& tr = state.field.truncation();
  SpectralField bhat(state.field.truncation_ptr());
  if (kern.nonlinear) bhat = nonlinear_term(state.field);

  double sum_sq = 0.0;
  for (std::size_t i = 0; i < state.field.size(); ++i) {
    Vec3c& c = state.field.coeff(i);
    Vec3c f{-bhat.coeff(i)[0], -bhat.coeff(i)[1], -bhat.coeff(i)[2]};
    if (spec.g)
      for (int d = 0; d < 3; ++d) f[d] += spec.g->coeff(i)[d];

    Vec3c noise{};
    if (kern.sigma[i] > 0.0) {
      const Complex z1 = state.rng.complex_gaussian();
      const Complex z2 = state.rng.complex_gaussian();
      const Vec3& e1 = tr.pol1(i);
      const Vec3& e2 = tr.pol2(i);
      for (int d = 0; d < 3; ++d) noise[d] = z1 * e1[d] + z2 * e2[d];
    }

    if (kern.scheme == Scheme::exp_euler) {
      for (int d = 0; d < 3; ++d)
        c[d] = kern.decay[i] * (c[d] + kern.dt * f[d]) + kern.noise_amp[i] * noise[d];
    } else {
      const double namp = kern.sigma[i] * std::sqrt(kern.dt);
      for (int d = 0; d < 3; ++d)
        c[d] = (c[d] + kern.dt * f[d] + namp * noise[d]) * kern.denom_inv[i];
    }
    sum_sq += std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
  }
  state.time += kern.dt;
  if (!std::isfinite(sum_sq)) throw std::runtime_error("non-finite coefficient");
}

}  // namespace

TrajectoryState step(TrajectoryState state, const SimConfig& cfg,
                     const ForcingSpec& spec) {
  cfg.validate();
  const StepKernel kern(cfg, spec);
  TrajectoryState before = state;
  try {
    advance(state, kern, spec);
  } catch (const std::runtime_error&) {
    throw BlowUpError(before.time, sobolev_norm(before.field, 0.0),
                      std::make_shared<TrajectoryState>(std::move(before)));
  }
  return state;
}

SimulateSummary simulate(const SimConfig& cfg, const ForcingSpec& spec,
                         const std::vector<SampleObserver>& observers,
                         std::uint64_t member, const TrajectoryState* resume_from) {
  cfg.validate();
  const auto wall_begin = std::chrono::steady_clock::now();
  const StepKernel kern(cfg, spec);

  const std::uint64_t burn_steps =
      static_cast<std::uint64_t>(std::llround(cfg.burn_time() / cfg.dt));
  const std::uint64_t sample_steps =
      static_cast<std::uint64_t>(std::llround(cfg.t_sample / cfg.dt));
  const std::uint64_t total_steps = burn_steps + sample_steps;

  TrajectoryState state = resume_from ? *resume_from : initial_state(cfg, member);
  std::uint64_t done =
      resume_from ? static_cast<std::uint64_t>(std::llround(state.time / cfg.dt)) : 0;
  if (done > total_steps)
    throw std::invalid_argument("checkpoint is past the configured horizon");

  std::uint64_t frames = 0;
  auto emit = [&](std::uint64_t s) {
    if (s < burn_steps) return;
    const std::uint64_t in_window = s - burn_steps;
    if (in_window % cfg.sample_stride != 0) return;
    // window time from the step count, not accumulated-time subtraction:
    // the latter can go negative by roundoff at the window start
    const SampleFrame frame{state, static_cast<double>(in_window) * cfg.dt,
                            in_window / cfg.sample_stride};
    for (const auto& obs : observers) obs(frame);
    ++frames;
  };

  TrajectoryState last_good = state;
  try {
    emit(done);
    for (std::uint64_t s = done; s < total_steps; ++s) {
      last_good = state;
      advance(state, kern, spec);
      emit(s + 1);
    }
  } catch (const std::runtime_error&) {
    // `state` was clobbered by the failing update; hand back the last
    // finite state so the caller can checkpoint it
    throw BlowUpError(state.time, sobolev_norm(last_good.field, 0.0),
                      std::make_shared<TrajectoryState>(std::move(last_good)));
  }

  SimulateSummary out;
  out.burn_steps = burn_steps;
  out.sample_steps = sample_steps;
  out.frames = frames;
  out.final_state = std::move(state);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_begin)
          .count();
  return out;
}

std::vector<SimulateSummary> run_ensemble(
    const SimConfig& cfg, const ForcingSpec& spec,
    const std::function<std::vector<SampleObserver>(std::uint64_t member)>&
        make_observers,
    int threads) {
  cfg.validate();
  const std::uint64_t members = cfg.ensemble_size;
  std::vector<SimulateSummary> results(members);
  std::vector<std::exception_ptr> errors(members);

  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(members)));
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t m = next.fetch_add(1);
      if (m >= members) return;
      try {
        results[m] = simulate(cfg, spec, make_observers(m), m);
      } catch (...) {
        errors[m] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'S', 'N', 'S', '3'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_value(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_value(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("checkpoint file is truncated");
  return v;
}

}  // namespace

void save_checkpoint(const TrajectoryState& state, const SimConfig& cfg,
                     const std::string& path, std::uint64_t extra_hash) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  write_value(os, kVersion);
  write_value(os, sim_config_hash(cfg, extra_hash));
  write_value(os, cfg.nu);
  write_value(os, static_cast<std::uint32_t>(cfg.truncation->k_max()));
  write_value(os, static_cast<std::uint8_t>(cfg.scheme));
  write_value(os, state.time);
  const std::string rng_blob = state.rng.serialize();
  write_value(os, static_cast<std::uint32_t>(rng_blob.size()));
  os.write(rng_blob.data(), static_cast<std::streamsize>(rng_blob.size()));
  write_value(os, static_cast<std::uint64_t>(state.field.size()));
  const auto& tr = state.field.truncation();
  for (std::size_t i = 0; i < state.field.size(); ++i) {
    const auto& k = tr.rep(i);
    write_value(os, static_cast<std::int32_t>(k.kx));
    write_value(os, static_cast<std::int32_t>(k.ky));
    write_value(os, static_cast<std::int32_t>(k.kz));
    for (int c = 0; c < 3; ++c) {
      write_value(os, state.field.coeff(i)[c].real());
      write_value(os, state.field.coeff(i)[c].imag());
    }
  }
  if (!os) throw CheckpointError("checkpoint write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("bad checkpoint magic");
  const auto version = read_value<std::uint16_t>(is);
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  CheckpointData out;
  out.config_hash = read_value<std::uint64_t>(is);
  out.nu = read_value<double>(is);
  out.k_max = static_cast<int>(read_value<std::uint32_t>(is));
  out.scheme = static_cast<Scheme>(read_value<std::uint8_t>(is));
  const double time = read_value<double>(is);
  const auto rng_len = read_value<std::uint32_t>(is);
  std::string rng_blob(rng_len, '\0');
  is.read(rng_blob.data(), rng_len);
  if (!is) throw CheckpointError("checkpoint file is truncated");

  auto trunc = Truncation::make(out.k_max);
  const auto count = read_value<std::uint64_t>(is);
  if (count != trunc->representative_count())
    throw CheckpointError("checkpoint mode count does not match k_max");
  SpectralField field(trunc);
  for (std::uint64_t i = 0; i < count; ++i) {
    Wavevector k;
    k.kx = read_value<std::int32_t>(is);
    k.ky = read_value<std::int32_t>(is);
    k.kz = read_value<std::int32_t>(is);
    Vec3c c;
    for (int d = 0; d < 3; ++d) {
      const double re = read_value<double>(is);
      const double im = read_value<double>(is);
      c[d] = {re, im};
    }
    field.set_coeff(k, c);
  }
  out.state = TrajectoryState{std::move(field), time,
                              RngStream::deserialize(rng_blob)};
  return out;
}

TrajectoryState load_checkpoint_for_resume(const std::string& path,
                                           const SimConfig& cfg,
                                           std::uint64_t extra_hash) {
  CheckpointData data = load_checkpoint(path);
  if (data.config_hash != sim_config_hash(cfg, extra_hash))
    throw CheckpointError("checkpoint config-hash mismatch on resume");
  return std::move(data.state);
}

}  // namespace sns3d
