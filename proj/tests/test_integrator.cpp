#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "sns3d/integrator.hpp"
#include "sns3d/oracle.hpp"
#include "test_util.hpp"

using namespace sns3d;
using namespace testutil;
using doctest::Approx;

namespace {

SimConfig base_config(int k_max, double nu = 0.5) {
  SimConfig cfg;
  cfg.nu = nu;
  cfg.truncation = Truncation::make(k_max);
  cfg.dt = 0.01;
  cfg.t_burn = 0.0;
  cfg.t_sample = 1.0;
  cfg.sample_stride = 10;
  cfg.seed = 42;
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sns3d_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config validation") {
  SimConfig cfg = base_config(2);
  CHECK_NOTHROW(cfg.validate());
  cfg.nu = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config(2);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config(2);
  cfg.sample_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(base_config(4).stability_number() == Approx(0.01 * 0.5 * 16.0));
}

TEST_CASE("stokes decay is exact for exponential euler") {
  SimConfig cfg = base_config(3);
  cfg.nonlinear = true;  // single modes kill B anyway
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, 0.0);
  const Wavevector k{1, 1, 1};
  TrajectoryState st = initial_state(cfg);
  st.field = single_mode_field(cfg.truncation, k, Complex{0.9, -0.2});
  const double norm0 = sobolev_norm(st.field, 0.0);
  const int steps = 50;
  for (int i = 0; i < steps; ++i) st = step(std::move(st), cfg, spec);
  const double expect = std::exp(-cfg.nu * k.norm2() * cfg.dt * steps) * norm0;
  CHECK(sobolev_norm(st.field, 0.0) == Approx(expect).epsilon(1e-12));
  CHECK(st.time == Approx(cfg.dt * steps).epsilon(1e-12));
}

TEST_CASE("zero data with no forcing stays zero") {
  SimConfig cfg = base_config(2);
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, 0.0);
  TrajectoryState st = initial_state(cfg);
  for (int i = 0; i < 20; ++i) st = step(std::move(st), cfg, spec);
  CHECK(st.field.is_zero());
}

TEST_CASE("steps preserve the field invariants") {
  SimConfig cfg = base_config(3);
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.5, 1.0);
  TrajectoryState st = initial_state(cfg);
  for (int i = 0; i < 25; ++i) st = step(std::move(st), cfg, spec);
  CHECK(st.field.all_finite());
  CHECK(st.field.max_divergence() <= 1e-13 * std::max(1.0, sobolev_norm(st.field, 0.0)));
}

TEST_CASE("simulate: observers, determinism, manual equivalence") {
  SimConfig cfg = base_config(2);
  cfg.t_burn = 0.2;
  cfg.t_sample = 0.6;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.5, 1.0);

  SUBCASE("zero observers leave the final state equal to manual stepping") {
    const auto sum = simulate(cfg, spec, {});
    TrajectoryState st = initial_state(cfg);
    const auto total = static_cast<int>(std::llround((0.2 + 0.6) / cfg.dt));
    for (int i = 0; i < total; ++i) st = step(std::move(st), cfg, spec);
    CHECK(sum.final_state.field == st.field);
    CHECK(sum.final_state.rng == st.rng);
    CHECK(sum.final_state.time == st.time);
  }

  SUBCASE("equal seeds produce bit-identical observer streams") {
    auto run = [&]() {
      std::vector<double> vals;
      simulate(cfg, spec,
               {[&vals](const SampleFrame& f) {
                 vals.push_back(sobolev_norm(f.state.field, 0.0));
               }});
      return vals;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 7);  // frames at window offsets 0, 0.1, ..., 0.6
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  SUBCASE("frames carry window time and index") {
    std::vector<double> times;
    std::vector<std::uint64_t> indices;
    simulate(cfg, spec,
             {[&](const SampleFrame& f) {
               times.push_back(f.window_time);
               indices.push_back(f.index);
             }});
    REQUIRE(times.size() == 7);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(indices[i] == i);
      CHECK(times[i] == Approx(0.1 * i).epsilon(1e-9));
    }
  }
}

TEST_CASE("ensemble members are independent") {
  SimConfig cfg = base_config(4);
  cfg.t_burn = 2.0;
  cfg.t_sample = 60.0;
  cfg.sample_stride = 10;
  cfg.ensemble_size = 2;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 0.5, 1.0);

  // probe a fast mode: its samples decorrelate within one stride
  const Wavevector probe{0, 0, 4};
  std::vector<std::vector<double>> series(2);
  auto make_obs = [&](std::uint64_t m) {
    return std::vector<SampleObserver>{[&series, m, probe](const SampleFrame& f) {
      series[m].push_back(f.state.field.coeff_at(probe)[0].real());
    }};
  };
  run_ensemble(cfg, spec, make_obs, 2);
  REQUIRE(series[0].size() == series[1].size());
  REQUIRE(series[0].size() > 500);

  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  const double n = static_cast<double>(series[0].size());
  for (std::size_t i = 0; i < series[0].size(); ++i) {
    s0 += series[0][i];
    s1 += series[1][i];
    s00 += series[0][i] * series[0][i];
    s11 += series[1][i] * series[1][i];
    s01 += series[0][i] * series[1][i];
  }
  const double cov = s01 / n - (s0 / n) * (s1 / n);
  const double corr = cov / std::sqrt((s00 / n - s0 * s0 / n / n) *
                                      (s11 / n - s1 * s1 / n / n));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(n));
}

TEST_CASE("thread count does not change ensemble results") {
  SimConfig cfg = base_config(2);
  cfg.t_burn = 0.0;
  cfg.t_sample = 0.5;
  cfg.ensemble_size = 4;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, 1.0);
  auto finals = [&](int threads) {
    std::vector<SimulateSummary> sums = run_ensemble(
        cfg, spec, [](std::uint64_t) { return std::vector<SampleObserver>{}; },
        threads);
    std::vector<SpectralField> out;
    for (auto& s : sums) out.push_back(s.final_state.field);
    return out;
  };
  const auto one = finals(1);
  const auto four = finals(4);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == four[i]);
}

TEST_CASE("semi-implicit stationary moment matches the discrete chain, bias halves with dt") {
  // per-mode chain z <- (z + sigma sqrt(dt) eta)/(1 + lam dt) has the exact
  // stationary moment sigma^2 dt / ((1+lam dt)^2 - 1); this is the oracle
  auto tr = Truncation::make(1);
  const double nu = 0.5, lam = nu * 1.0, sigma = 1.0;
  auto chain_moment = [&](double dt) {
    const double per_dof = sigma * sigma * dt / ((1.0 + lam * dt) * (1.0 + lam * dt) - 1.0);
    return 12.0 * per_dof;  // 3 reps x 2 pol x the +-k doubling
  };
  const OuSpec ou = OuSpec::make(nu, ForcingSpec::power_law(tr, 2.0, sigma));
  const double exact = ou_exact_second_moment(ou, 0.0);

  const double bias1 = std::abs(chain_moment(0.2) - exact);
  const double bias2 = std::abs(chain_moment(0.1) - exact);
  CHECK(bias1 / bias2 == Approx(2.0).epsilon(0.06));  // ~linear weak error

  SimConfig cfg = base_config(1, nu);
  cfg.scheme = Scheme::semi_implicit;
  cfg.nonlinear = false;
  cfg.dt = 0.2;
  cfg.t_burn = 30.0;
  cfg.t_sample = 4000.0;
  cfg.sample_stride = 5;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, sigma);
  double sum = 0.0, sum2 = 0.0;
  std::uint64_t count = 0;
  simulate(cfg, spec,
           {[&](const SampleFrame& f) {
             const double v = sobolev_norm(f.state.field, 0.0);
             sum += v * v;
             sum2 += v * v * v * v;
             ++count;
           }});
  const double mean = sum / count;
  // autocorrelation-aware tolerance: correlation time ~ 1/(2 lam) = 1,
  // sample spacing 1.0, so samples are nearly independent
  const double se = std::sqrt((sum2 / count - mean * mean) / count) * 2.0;
  CHECK(std::abs(mean - chain_moment(cfg.dt)) <= 3.0 * se);
}

TEST_CASE("blow-up is detected and reported with the last finite state") {
  SimConfig cfg = base_config(2);
  cfg.t_burn = 0.0;
  cfg.t_sample = 5.0;
  cfg.nonlinear = true;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 0.1, 1e170);
  CHECK_THROWS_AS(simulate(cfg, spec, {}), BlowUpError);
  try {
    simulate(cfg, spec, {});
  } catch (const BlowUpError& e) {
    CHECK(e.last_state());
    CHECK(e.last_state()->field.all_finite());
    CHECK(std::isfinite(e.last_norm()));
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("checkpoints") {
  TempDir tmp;
  SimConfig cfg = base_config(3);
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, 1.0);
  TrajectoryState st = initial_state(cfg);
  for (int i = 0; i < 7; ++i) st = step(std::move(st), cfg, spec);

  SUBCASE("save then load reproduces the state bit-exactly") {
    const std::string path = tmp.file("state.sns3");
    save_checkpoint(st, cfg, path);
    const CheckpointData data = load_checkpoint(path);
    CHECK(data.nu == cfg.nu);
    CHECK(data.k_max == 3);
    CHECK(data.scheme == cfg.scheme);
    CHECK(data.config_hash == sim_config_hash(cfg));
    CHECK(data.state.field == st.field);
    CHECK(data.state.time == st.time);
    CHECK(data.state.rng == st.rng);
  }

  SUBCASE("resume continues exactly like an uninterrupted run") {
    const std::string path = tmp.file("mid.sns3");
    save_checkpoint(st, cfg, path);
    TrajectoryState resumed = load_checkpoint_for_resume(path, cfg);
    TrajectoryState direct = st;
    for (int i = 0; i < 10; ++i) {
      resumed = step(std::move(resumed), cfg, spec);
      direct = step(std::move(direct), cfg, spec);
    }
    CHECK(resumed.field == direct.field);
    CHECK(resumed.rng == direct.rng);
    CHECK(resumed.time == direct.time);
  }

  SUBCASE("corrupted magic is rejected") {
    const std::string path = tmp.file("bad.sns3");
    save_checkpoint(st, cfg, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }

  SUBCASE("truncated file is rejected") {
    const std::string full = tmp.file("full.sns3");
    save_checkpoint(st, cfg, full);
    std::ifstream in(full, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    const std::string cut = tmp.file("cut.sns3");
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(cut), CheckpointError);
  }

  SUBCASE("config-hash mismatch on resume is rejected") {
    const std::string path = tmp.file("hash.sns3");
    save_checkpoint(st, cfg, path);
    SimConfig other = cfg;
    other.dt = 0.02;
    CHECK_THROWS_AS(load_checkpoint_for_resume(path, other), CheckpointError);
    // extra word mismatches too
    CHECK_THROWS_AS(load_checkpoint_for_resume(path, cfg, 99), CheckpointError);
  }
}

TEST_CASE("simulate resumes through its own checkpoint bit-exactly") {
  TempDir tmp;
  SimConfig cfg = base_config(2);
  cfg.t_burn = 0.0;
  cfg.t_sample = 1.0;
  const auto spec = ForcingSpec::power_law(cfg.truncation, 2.0, 1.0);

  // uninterrupted reference
  const auto full = simulate(cfg, spec, {});

  // first half, checkpoint, then resume to the end
  SimConfig half = cfg;
  half.t_sample = 0.5;
  const auto part = simulate(half, spec, {});
  const std::string path = tmp.file("resume.sns3");
  save_checkpoint(part.final_state, cfg, path);
  TrajectoryState st = load_checkpoint_for_resume(path, cfg);
  const auto rest = simulate(cfg, spec, {}, 0, &st);

  CHECK(rest.final_state.field == full.final_state.field);
  CHECK(rest.final_state.rng == full.final_state.rng);
  CHECK(rest.final_state.time == full.final_state.time);
}
