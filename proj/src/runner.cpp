#include "sns3d/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sns3d/kolmogorov.hpp"
#include "sns3d/measure.hpp"
#include "sns3d/oracle.hpp"

namespace sns3d {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string member_name(const char* stem, std::uint64_t m, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_m%04llu.%s", stem,
                static_cast<unsigned long long>(m), ext);
  return buf;
}

struct RunContext {
  ExperimentConfig cfg;
  ForcingSpec forcing;
  fs::path outdir;
  int threads = 1;
  std::optional<std::string> resume;
  std::uint64_t config_hash = 0;
  json summary;
  std::vector<std::string> files;
  std::vector<CheckResult> checks;
  bool blew_up = false;

  void check(const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  }
};

void write_csv(RunContext& ctx, const std::string& name,
               const std::string& columns, const std::string& body) {
  const fs::path p = ctx.outdir / name;
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open output file: " + p.string());
  os << "# sns3d " << version_string() << "\n";
  os << "# config_hash: " << hex64(ctx.config_hash) << "\n";
  os << "# seed: " << ctx.cfg.sim.seed << "\n";
  os << "# columns: " << columns << "\n";
  os << columns << "\n";
  os << body;
  ctx.files.push_back(p.string());
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  std::istringstream is(config_echo(cfg));
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

void init_summary(RunContext& ctx, const std::string& subcommand,
                  const json& functionals) {
  ctx.summary = json::object();
  ctx.summary["meta"] = {
      {"version", version_string()},
      {"config_hash", hex64(ctx.config_hash)},
      {"seed", ctx.cfg.sim.seed},
      {"subcommand", subcommand},
      {"threads", ctx.threads},
      {"output_dir", ctx.cfg.output_dir},
      {"functionals", functionals},
  };
  ctx.summary["config"] = config_json(ctx.cfg);
}

// time-averaged shell statistics; shells keep the truncation's structure
struct SpectrumAccum {
  bool init = false;
  ShellSpectrum sum;
  std::uint64_t frames = 0;

  void add(const ShellSpectrum& s) {
    if (!init) {
      sum = s;
      init = true;
      frames = 1;
      return;
    }
    for (std::size_t i = 0; i < sum.shells.size(); ++i) {
      sum.shells[i].mean_amplitude += s.shells[i].mean_amplitude;
      sum.shells[i].mean_log_amplitude += s.shells[i].mean_log_amplitude;
    }
    ++frames;
  }

  ShellSpectrum average() const {
    ShellSpectrum out = sum;
    if (frames > 1) {
      for (auto& st : out.shells) {
        st.mean_amplitude /= static_cast<double>(frames);
        st.mean_log_amplitude /= static_cast<double>(frames);
      }
    }
    return out;
  }
};

void write_spectrum_csv(RunContext& ctx, const std::string& name,
                        const ShellSpectrum& spec) {
  std::ostringstream body;
  for (const auto& st : spec.shells)
    body << st.shell << ',' << fmt_g(st.mean_amplitude) << ',' << st.mode_count
         << '\n';
  write_csv(ctx, name, "shell,mean_amplitude,mode_count", body.str());
}

json acc_json(const MomentAccumulator& acc) {
  return {{"id", acc.id()},
          {"mean", acc.mean()},
          {"stderr", acc.stderr_batch()},
          {"count", acc.count()},
          {"batches", acc.batch_count()}};
}

// shared ensemble driver with blow-up capture; returns false on blow-up
bool run_members(RunContext& ctx,
                 const std::function<std::vector<SampleObserver>(std::uint64_t)>&
                     make_observers,
                 std::vector<SimulateSummary>& sums, bool allow_resume = false) {
  const std::uint64_t forcing_word = ctx.cfg.forcing_hash();
  try {
    if (ctx.resume) {
      if (!allow_resume)
        throw ConfigError("--resume is only supported by the simulate subcommand");
      if (ctx.cfg.sim.ensemble_size != 1)
        throw ConfigError("--resume requires ensemble.size = 1");
      TrajectoryState st =
          load_checkpoint_for_resume(*ctx.resume, ctx.cfg.sim, forcing_word);
      sums.push_back(simulate(ctx.cfg.sim, ctx.forcing, make_observers(0), 0, &st));
    } else {
      sums = run_ensemble(ctx.cfg.sim, ctx.forcing, make_observers, ctx.threads);
    }
    return true;
  } catch (const BlowUpError& e) {
    ctx.blew_up = true;
    const fs::path p = ctx.outdir / "blowup.sns3";
    save_checkpoint(*e.last_state(), ctx.cfg.sim, p.string(), forcing_word);
    ctx.files.push_back(p.string());
    ctx.summary["blowup"] = {{"time", e.time()},
                             {"last_norm", e.last_norm()},
                             {"checkpoint", p.string()}};
    ctx.check("no_blowup", false, e.what());
    return false;
  }
}

// -------------------------------------------------------------------------
// simulate

struct SimMemberData {
  MomentAccumulator h0{"h0_sq"}, h1{"h1_sq"}, h2{"h2_sq"};
  std::ostringstream rows;
  SpectrumAccum spectrum;
};

void run_simulate(RunContext& ctx) {
  init_summary(ctx, "simulate", json::array({"h0_sq", "h1_sq", "h2_sq"}));
  std::vector<SimMemberData> members(ctx.cfg.sim.ensemble_size);

  auto make_obs = [&](std::uint64_t m) {
    SimMemberData& data = members[m];
    return std::vector<SampleObserver>{[&data](const SampleFrame& f) {
      const double h0 = sobolev_norm(f.state.field, 0.0);
      const double h1 = sobolev_norm(f.state.field, 1.0);
      const double h2 = sobolev_norm(f.state.field, 2.0);
      data.h0.add(h0 * h0);
      data.h1.add(h1 * h1);
      data.h2.add(h2 * h2);
      data.rows << fmt_g(f.state.time) << ',' << fmt_g(h0 * h0) << ','
                << fmt_g(h1 * h1) << ',' << fmt_g(h2 * h2) << '\n';
      data.spectrum.add(shell_spectrum(f.state.field));
    }};
  };

  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums, /*allow_resume=*/true)) return;

  const std::uint64_t forcing_word = ctx.cfg.forcing_hash();
  MomentAccumulator h0{"h0_sq"}, h1{"h1_sq"}, h2{"h2_sq"};
  double wall = 0.0;
  for (std::uint64_t m = 0; m < sums.size(); ++m) {
    write_csv(ctx, member_name("samples", m, "csv"), "time,h0_sq,h1_sq,h2_sq",
              members[m].rows.str());
    write_spectrum_csv(ctx, member_name("spectrum", m, "csv"),
                       members[m].spectrum.average());
    const fs::path ck = ctx.outdir / member_name("checkpoint", m, "sns3");
    save_checkpoint(sums[m].final_state, ctx.cfg.sim, ck.string(), forcing_word);
    ctx.files.push_back(ck.string());
    h0.merge(members[m].h0);
    h1.merge(members[m].h1);
    h2.merge(members[m].h2);
    wall += sums[m].wall_seconds;
  }

  const auto intensities = forcing_intensities(ctx.forcing, 0, ctx.cfg.sim.nu);
  const EnergyBalance eb = energy_balance(h1, intensities, ctx.cfg.sim.nu);
  ctx.summary["moments"] = json::array({acc_json(h0), acc_json(h1), acc_json(h2)});
  ctx.summary["energy_balance"] = {
      {"mean_h1_sq", eb.mean_h1_sq},     {"noise_rate", eb.noise_rate},
      {"residual", eb.residual},         {"relative", eb.relative},
      {"bound_holds", eb.bound_holds},   {"exact_identity_valid", !ctx.forcing.g}};
  ctx.summary["timing"] = {{"wall_seconds", wall},
                           {"frames", sums.empty() ? 0 : sums[0].frames}};
  if (ctx.cfg.sim.scheme == Scheme::semi_implicit &&
      ctx.cfg.sim.stability_number() > 2.0)
    ctx.summary["warnings"] = json::array(
        {"stability number dt*nu*k_max^2 exceeds 2 for semi_implicit"});
}

// -------------------------------------------------------------------------
// ou-validate

void run_ou_validate(RunContext& ctx) {
  ctx.cfg.sim.nonlinear = false;  // linear Stokes reference configuration
  ctx.config_hash = ctx.cfg.hash();
  init_summary(ctx, "ou-validate",
               json::array({"h0_sq", "h1_sq", "h2_sq", "generator_quadratic"}));

  std::vector<SimMemberData> members(ctx.cfg.sim.ensemble_size);
  auto make_obs = [&](std::uint64_t m) {
    SimMemberData& data = members[m];
    return std::vector<SampleObserver>{[&data](const SampleFrame& f) {
      const double h0 = sobolev_norm(f.state.field, 0.0);
      const double h1 = sobolev_norm(f.state.field, 1.0);
      const double h2 = sobolev_norm(f.state.field, 2.0);
      data.h0.add(h0 * h0);
      data.h1.add(h1 * h1);
      data.h2.add(h2 * h2);
    }};
  };
  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums)) return;

  MomentAccumulator merged[3] = {MomentAccumulator{"h0_sq"},
                                 MomentAccumulator{"h1_sq"},
                                 MomentAccumulator{"h2_sq"}};
  for (auto& data : members) {
    merged[0].merge(data.h0);
    merged[1].merge(data.h1);
    merged[2].merge(data.h2);
  }

  const OuSpec ou = OuSpec::make(ctx.cfg.sim.nu, ctx.forcing);
  std::ostringstream body;
  json moment_rows = json::array();
  for (int m = 0; m < 3; ++m) {
    const double exact = ou_exact_second_moment(ou, static_cast<double>(m));
    const double sim_mean = merged[m].mean();
    const double se = merged[m].stderr_batch();
    const double err = std::abs(sim_mean - exact);
    const bool within_se = err <= 3.0 * se;
    const bool within_5pct = exact > 0.0 ? err <= 0.05 * exact : err == 0.0;
    ctx.check("ou_moment_m" + std::to_string(m), within_se && within_5pct,
              "simulated " + fmt_g(sim_mean) + " exact " + fmt_g(exact) +
                  " stderr " + fmt_g(se));
    body << m << ',' << fmt_g(sim_mean) << ',' << fmt_g(se) << ','
         << fmt_g(exact) << ',' << fmt_g(exact > 0 ? err / exact : 0.0) << '\n';
    moment_rows.push_back({{"m", m},
                           {"simulated", sim_mean},
                           {"stderr", se},
                           {"exact", exact}});
  }
  write_csv(ctx, "ou_moments.csv", "m,simulated,stderr,exact,rel_error",
            body.str());

  // exact Gaussian sampler against the closed form, and the quadratic
  // functional whose generator mean vanishes under the stationary law
  constexpr int kDraws = 10000;
  RngStream rng = RngStream::for_member(ctx.cfg.sim.seed, 1ULL << 62);
  MomentAccumulator sampler_acc{"sampler_h0_sq"};
  GeneratorResidual quad(std::make_shared<QuadraticEnergyFunctional>(),
                         ctx.forcing, ctx.cfg.sim.nu, "generator_quadratic",
                         /*nonlinear=*/false);
  for (int i = 0; i < kDraws; ++i) {
    const SpectralField x = ou_sample_stationary(ou, rng);
    const double h0 = sobolev_norm(x, 0.0);
    sampler_acc.add(h0 * h0);
    quad.add(x);
  }
  const double exact0 = ou_exact_second_moment(ou, 0.0);
  const double sampler_se =
      std::sqrt(sampler_acc.variance() / static_cast<double>(kDraws));
  ctx.check("ou_sampler_h0",
            std::abs(sampler_acc.mean() - exact0) <= 3.0 * sampler_se,
            "sampled " + fmt_g(sampler_acc.mean()) + " exact " + fmt_g(exact0));
  const double quad_se =
      std::sqrt(quad.accumulator().variance() / static_cast<double>(kDraws));
  ctx.check("ou_generator_quadratic", std::abs(quad.mean()) <= 3.0 * quad_se,
            "mean " + fmt_g(quad.mean()) + " stderr " + fmt_g(quad_se));

  ctx.summary["ou"] = {{"moments", moment_rows},
                       {"sampler_mean", sampler_acc.mean()},
                       {"sampler_exact", exact0},
                       {"generator_quadratic_mean", quad.mean()},
                       {"generator_quadratic_stderr", quad_se},
                       {"draws", kDraws}};
}

// -------------------------------------------------------------------------
// moments

struct MomentsMemberData {
  struct PerP {
    MomentAccumulator reg, reg_last_half, mp, rp, mp_next;
  };
  std::vector<PerP> per_p;
  std::ostringstream rows;
};

void run_moments(RunContext& ctx) {
  json funcs = json::array();
  for (int p : ctx.cfg.analysis.p_list) {
    funcs.push_back("regularity_p" + std::to_string(p));
    funcs.push_back("lyapunov_moment_p" + std::to_string(p));
    funcs.push_back("smoothing_ratio_p" + std::to_string(p));
  }
  init_summary(ctx, "moments", funcs);

  const auto& plist = ctx.cfg.analysis.p_list;
  const std::uint64_t total_frames =
      static_cast<std::uint64_t>(
          std::llround(ctx.cfg.sim.t_sample / ctx.cfg.sim.dt)) /
          ctx.cfg.sim.sample_stride +
      1;
  std::vector<MomentsMemberData> members(ctx.cfg.sim.ensemble_size);
  for (auto& data : members) {
    data.per_p.resize(plist.size());
    for (std::size_t i = 0; i < plist.size(); ++i) {
      const std::string ps = std::to_string(plist[i]);
      auto& pp = data.per_p[i];
      pp.reg = MomentAccumulator{"regularity_p" + ps};
      pp.reg_last_half = MomentAccumulator{"regularity_p" + ps + "_last_half"};
      pp.mp = MomentAccumulator{"lyapunov_moment_p" + ps};
      pp.rp = MomentAccumulator{"smoothing_ratio_p" + ps};
      pp.mp_next = MomentAccumulator{"lyapunov_moment_p" + std::to_string(plist[i] + 1)};
    }
  }

  const double nu = ctx.cfg.sim.nu;
  auto make_obs = [&, total_frames](std::uint64_t m) {
    MomentsMemberData& data = members[m];
    return std::vector<SampleObserver>{[&data, &plist, nu,
                                        total_frames](const SampleFrame& f) {
      data.rows << fmt_g(f.state.time);
      for (std::size_t i = 0; i < plist.size(); ++i) {
        const int p = plist[i];
        const double reg = regularity_statistic(f.state.field, p);
        const double mp = lyapunov_moment(f.state.field, p, nu);
        const double rp = smoothing_ratio(f.state.field, p, nu);
        auto& pp = data.per_p[i];
        pp.reg.add(reg);
        if (f.index >= total_frames / 2) pp.reg_last_half.add(reg);
        pp.mp.add(mp);
        pp.rp.add(rp);
        pp.mp_next.add(lyapunov_moment(f.state.field, p + 1, nu));
        data.rows << ',' << fmt_g(reg) << ',' << fmt_g(mp) << ',' << fmt_g(rp);
      }
      data.rows << '\n';
    }};
  };

  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums)) return;

  std::string columns = "time";
  for (int p : plist) {
    const std::string ps = std::to_string(p);
    columns += ",regularity_p" + ps + ",lyapunov_moment_p" + ps +
               ",smoothing_ratio_p" + ps;
  }
  for (std::uint64_t m = 0; m < sums.size(); ++m)
    write_csv(ctx, member_name("moments", m, "csv"), columns,
              members[m].rows.str());

  json table = json::array();
  for (std::size_t i = 0; i < plist.size(); ++i) {
    MomentsMemberData::PerP merged;
    const std::string ps = std::to_string(plist[i]);
    merged.reg = MomentAccumulator{"regularity_p" + ps};
    merged.reg_last_half = MomentAccumulator{"regularity_p" + ps + "_last_half"};
    merged.mp = MomentAccumulator{"lyapunov_moment_p" + ps};
    merged.rp = MomentAccumulator{"smoothing_ratio_p" + ps};
    merged.mp_next = MomentAccumulator{"lyapunov_moment_p" + std::to_string(plist[i] + 1)};
    for (auto& data : members) {
      merged.reg.merge(data.per_p[i].reg);
      merged.reg_last_half.merge(data.per_p[i].reg_last_half);
      merged.mp.merge(data.per_p[i].mp);
      merged.rp.merge(data.per_p[i].rp);
      merged.mp_next.merge(data.per_p[i].mp_next);
    }
    const int p = plist[i];
    const double full = merged.reg.mean();
    const double last = merged.reg_last_half.mean();
    const double dev = full != 0.0 ? std::abs(last - full) / full : 0.0;
    ctx.check("regularity_finite_p" + ps, std::isfinite(full),
              "mean " + fmt_g(full));
    ctx.check("regularity_stable_p" + ps, dev <= 0.10,
              "last-half vs full deviation " + fmt_g(dev));
    // Hoelder recursion on the empirical measure
    const double lhs = merged.mp_next.mean();
    const double rhs = std::pow(merged.rp.mean(), 1.0 / (2.0 * p + 1.0)) *
                       std::pow(merged.mp.mean(), 2.0 * p / (2.0 * p + 1.0));
    ctx.check("moment_recursion_p" + ps, lhs <= rhs * 1.02,
              "avg next " + fmt_g(lhs) + " vs bound " + fmt_g(rhs));
    table.push_back({{"p", p},
                     {"regularity", acc_json(merged.reg)},
                     {"regularity_last_half", acc_json(merged.reg_last_half)},
                     {"lyapunov_moment", acc_json(merged.mp)},
                     {"smoothing_ratio", acc_json(merged.rp)},
                     {"lyapunov_moment_next", acc_json(merged.mp_next)},
                     {"stability_rel_dev", dev},
                     {"recursion_lhs", lhs},
                     {"recursion_rhs", rhs}});
  }
  ctx.summary["moments"] = table;
}

// -------------------------------------------------------------------------
// gevrey

struct GevreyMemberData {
  GevreyExitTracker tracker{1.0, 1.0, 1.0};
  std::ostringstream budget_rows;
  std::ostringstream alpha_rows;
  std::vector<double> alpha_samples;
  MomentAccumulator log_moment{"log_plus_moment"};
  MomentAccumulator radius_weighted{"gevrey_sq_at_alpha_nu_gamma"};
  MomentAccumulator radius_neg{"alpha_nu_neg_gamma_half"};
  std::uint64_t interp_checked = 0;
  std::uint64_t interp_violations = 0;
  std::uint64_t clamped = 0;
  bool budget_overflow = false;
};

void run_gevrey(RunContext& ctx) {
  if (ctx.cfg.family != ForcingFamily::gevrey)
    throw ConfigError(
        "the gevrey subcommand needs forcing.family = gevrey (the functionals "
        "are typed by the forcing's alpha and beta)");
  init_summary(ctx, "gevrey",
               json::array({"tau", "alpha_nu", "gevrey_budget",
                            "log_plus_moment", "interpolation"}));

  const double nu = ctx.cfg.sim.nu;
  const double beta = ctx.cfg.forcing_beta;
  const double alpha_cap = ctx.cfg.forcing_alpha;
  const double alpha_prime = ctx.cfg.analysis.alpha_prime;
  const double beta_prime = ctx.cfg.analysis.beta_prime;
  const double gamma = ctx.cfg.analysis.gamma;
  const double horizon = ctx.cfg.tau_horizon();
  const double bbar0 = forcing_intensities(ctx.forcing, 0, nu).combined_visc;
  const bool want_alpha = ctx.cfg.analysis.alpha_nu;
  const bool want_tau = ctx.cfg.analysis.tau;

  std::vector<GevreyMemberData> members(ctx.cfg.sim.ensemble_size);
  for (auto& data : members) data.tracker = GevreyExitTracker(nu, beta, horizon);

  auto make_obs = [&](std::uint64_t m) {
    GevreyMemberData& data = members[m];
    const ForcingSpec& forcing = ctx.forcing;
    return std::vector<SampleObserver>{[&data, &forcing, m, nu, beta, alpha_cap,
                                        alpha_prime, beta_prime, gamma, bbar0,
                                        want_alpha, want_tau](const SampleFrame& f) {
      const SpectralField& x = f.state.field;
      if (want_tau) data.tracker.observe(f.window_time, x);

      const GevreyBudget b = gevrey_budget(x, f.window_time, nu, beta, forcing);
      data.budget_overflow |= b.overflowed;
      data.budget_rows << fmt_g(f.state.time) << ',' << fmt_g(b.i_b) << ','
                       << fmt_g(b.i_g) << ',' << fmt_g(b.i_phi) << ','
                       << fmt_g(b.gevrey_sq) << ',' << fmt_g(b.dissipation)
                       << '\n';

      if (want_alpha) {
        const double a = analyticity_radius(x, nu, beta, bbar0, alpha_cap);
        data.alpha_rows << m << ',' << fmt_g(f.state.time) << ',' << fmt_g(a)
                        << '\n';
        data.alpha_samples.push_back(a);
        if (a >= alpha_cap) ++data.clamped;
        data.radius_neg.add(std::pow(a, -0.5 * gamma));
        const double gw = gevrey_norm(x, GevreyParams{nu * a, beta});
        data.radius_weighted.add(std::pow(gw * gw, gamma));
      }

      data.log_moment.add(log_plus_moment(x, alpha_prime, beta_prime, gamma));
      ++data.interp_checked;
      if (!check_gevrey_interpolation(x, alpha_cap, alpha_prime, beta, beta_prime))
        ++data.interp_violations;
    }};
  };

  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums)) return;

  std::ostringstream tau_body, alpha_body;
  std::vector<TauSample> tau_samples;
  MomentAccumulator sup_acc{"sup_gevrey_sq"};
  MomentAccumulator log_moment{"log_plus_moment"};
  MomentAccumulator radius_weighted{"gevrey_sq_at_alpha_nu_gamma"};
  MomentAccumulator radius_neg{"alpha_nu_neg_gamma_half"};
  std::uint64_t interp_checked = 0, interp_violations = 0, clamped = 0,
                alpha_count = 0;
  bool identity_holds = true;
  bool overflow = false;
  double alpha_min = alpha_cap, alpha_max = 0.0, alpha_sum = 0.0;

  for (std::uint64_t m = 0; m < sums.size(); ++m) {
    GevreyMemberData& data = members[m];
    write_csv(ctx, member_name("budget", m, "csv"),
              "time,i_b,i_g,i_phi,gevrey_sq,dissipation",
              data.budget_rows.str());
    if (want_tau) {
      const auto rec = data.tracker.record();
      tau_samples.push_back(
          {rec.tau, rec.censored, rec.sup_gevrey_sq, rec.initial_h1_sq});
      sup_acc.add(rec.sup_gevrey_sq);
      identity_holds &=
          rec.sup_gevrey_sq <= 4.0 * (rec.initial_h1_sq + 1.0);
      tau_body << m << ',' << fmt_g(rec.tau) << ',' << (rec.censored ? 1 : 0)
               << ',' << fmt_g(rec.sup_gevrey_sq) << ','
               << fmt_g(rec.initial_h1_sq) << '\n';
    }
    alpha_body << data.alpha_rows.str();
    for (double a : data.alpha_samples) {
      alpha_min = std::min(alpha_min, a);
      alpha_max = std::max(alpha_max, a);
      alpha_sum += a;
      ++alpha_count;
    }
    log_moment.merge(data.log_moment);
    radius_weighted.merge(data.radius_weighted);
    radius_neg.merge(data.radius_neg);
    interp_checked += data.interp_checked;
    interp_violations += data.interp_violations;
    clamped += data.clamped;
    overflow |= data.budget_overflow;
  }

  if (want_tau) {
    write_csv(ctx, "tau.csv", "member,tau,censored,sup_gevrey_sq,initial_h1_sq",
              tau_body.str());
    const TauCdfFit fit = fit_tau_cdf(tau_samples, horizon);
    const double sup_bound = 4.0 / nu * (bbar0 + 1.0);
    const double sup_mean = sup_acc.mean();
    const double sup_se = sup_acc.count() > 1
                              ? std::sqrt(sup_acc.variance() /
                                          static_cast<double>(sup_acc.count()))
                              : 0.0;
    ctx.check("tau_threshold_identity", identity_holds,
              "sup_{t<tau} ||X||^2_G within 4(1+||X(0)||_1^2) on every sample");
    ctx.check("tau_sup_bound", sup_mean <= sup_bound + 3.0 * sup_se,
              "ensemble mean sup " + fmt_g(sup_mean) + " vs bound " +
                  fmt_g(sup_bound));
    const bool fit_ok = fit.all_censored || fit.points_used < 4 ||
                        fit.r_squared >= 0.8;
    ctx.check("tau_cdf_sqrt_fit", fit_ok,
              fit.all_censored
                  ? "no exits before the horizon (CDF identically 0)"
                  : "a " + fmt_g(fit.a) + " R^2 " + fmt_g(fit.r_squared) +
                        " on " + std::to_string(fit.points_used) + " points");
    std::size_t events = 0;
    for (const auto& s : tau_samples)
      if (!s.censored) ++events;
    ctx.summary["tau"] = {{"samples", tau_samples.size()},
                          {"events", events},
                          {"censored", tau_samples.size() - events},
                          {"horizon", horizon},
                          {"sup_mean", sup_mean},
                          {"sup_bound", sup_bound},
                          {"cdf_fit_a", fit.a},
                          {"cdf_fit_r_squared", fit.r_squared},
                          {"cdf_fit_points", fit.points_used},
                          {"all_censored", fit.all_censored}};
  }

  if (want_alpha) {
    write_csv(ctx, "alpha_nu.csv", "member,time,alpha_nu", alpha_body.str());
    ctx.summary["alpha_nu"] = {
        {"samples", alpha_count},
        {"mean", alpha_count ? alpha_sum / static_cast<double>(alpha_count) : 0.0},
        {"min", alpha_count ? alpha_min : 0.0},
        {"max", alpha_max},
        {"clamped_fraction",
         alpha_count ? static_cast<double>(clamped) / static_cast<double>(alpha_count)
                     : 0.0},
        {"cap", alpha_cap},
        {"weighted_gevrey_moment", acc_json(radius_weighted)},
        {"neg_moment", acc_json(radius_neg)}};
  }

  ctx.check("interpolation_inequality", interp_violations == 0,
            std::to_string(interp_violations) + " violations over " +
                std::to_string(interp_checked) + " sampled states");
  const bool gamma_ok = 2.0 * gamma < beta / beta_prime - 1.0;
  ctx.summary["log_moment"] = {{"stats", acc_json(log_moment)},
                               {"gamma_condition_met", gamma_ok}};
  ctx.summary["interpolation"] = {{"checked", interp_checked},
                                  {"violations", interp_violations},
                                  {"constant", gevrey_interp_constant(beta, beta_prime)}};
  ctx.summary["meta"]["notes"] = json::array(
      {"tau and sup functionals are evaluated on the sampling grid; the "
       "continuous-time sup is underestimated"});
  if (overflow)
    ctx.summary["warnings"] =
        json::array({"gevrey budget entered the log-domain overflow guard"});
}

// -------------------------------------------------------------------------
// kolmogorov

struct KolmogorovMemberData {
  std::vector<GeneratorResidual> residuals;
  std::ostringstream rows;
};

void run_kolmogorov(RunContext& ctx) {
  json funcs = json::array();
  for (int p : ctx.cfg.analysis.p_list)
    funcs.push_back("generator_lyapunov_p" + std::to_string(p));
  funcs.push_back("generator_quadratic");
  init_summary(ctx, "kolmogorov", funcs);

  const double nu = ctx.cfg.sim.nu;
  const bool nonlinear = ctx.cfg.sim.nonlinear;
  std::vector<std::shared_ptr<const TestFunctional>> functionals;
  std::vector<std::string> names;
  for (int p : ctx.cfg.analysis.p_list) {
    functionals.push_back(std::make_shared<LyapunovFunctional>(p));
    names.push_back("generator_lyapunov_p" + std::to_string(p));
  }
  functionals.push_back(std::make_shared<QuadraticEnergyFunctional>());
  names.push_back("generator_quadratic");

  std::vector<KolmogorovMemberData> members(ctx.cfg.sim.ensemble_size);
  for (auto& data : members)
    for (std::size_t i = 0; i < functionals.size(); ++i)
      data.residuals.emplace_back(functionals[i], ctx.forcing, nu, names[i],
                                  nonlinear);

  auto make_obs = [&](std::uint64_t m) {
    KolmogorovMemberData& data = members[m];
    const ForcingSpec& forcing = ctx.forcing;
    auto* fns = &functionals;
    return std::vector<SampleObserver>{[&data, &forcing, fns, nu,
                                        nonlinear](const SampleFrame& f) {
      data.rows << fmt_g(f.state.time);
      for (std::size_t i = 0; i < fns->size(); ++i) {
        const double v =
            apply_generator(f.state.field, *(*fns)[i], forcing, nu, nonlinear);
        data.residuals[i].add_value(v);
        data.rows << ',' << fmt_g(v);
      }
      data.rows << '\n';
    }};
  };

  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums)) return;

  std::string columns = "time";
  for (const auto& n : names) columns += "," + n;
  for (std::uint64_t m = 0; m < sums.size(); ++m)
    write_csv(ctx, member_name("generator", m, "csv"), columns,
              members[m].rows.str());

  json block = json::array();
  for (std::size_t i = 0; i < functionals.size(); ++i) {
    GeneratorResidual merged(functionals[i], ctx.forcing, nu, names[i], nonlinear);
    for (auto& data : members) merged.merge(data.residuals[i]);
    const double mean = merged.mean();
    const double se = merged.stderr_batch();
    const bool pass = std::abs(mean) <= 3.0 * se;
    ctx.check(names[i] + "_stationary", pass,
              "mean " + fmt_g(mean) + " stderr " + fmt_g(se));
    block.push_back({{"functional", names[i]},
                     {"mean", mean},
                     {"stderr", se},
                     {"count", merged.count()},
                     {"window_time", ctx.cfg.sim.t_sample},
                     {"within_3se", pass}});
  }
  ctx.summary["generator_residuals"] = block;
}

// -------------------------------------------------------------------------
// dissipation

void run_dissipation(RunContext& ctx) {
  init_summary(ctx, "dissipation", json::array({"shell_spectrum", "decay_fit"}));
  std::vector<SpectrumAccum> members(ctx.cfg.sim.ensemble_size);

  auto make_obs = [&](std::uint64_t m) {
    SpectrumAccum& acc = members[m];
    return std::vector<SampleObserver>{[&acc](const SampleFrame& f) {
      acc.add(shell_spectrum(f.state.field));
    }};
  };
  std::vector<SimulateSummary> sums;
  if (!run_members(ctx, make_obs, sums)) return;

  SpectrumAccum merged;
  for (auto& acc : members) merged.add(acc.average());
  const ShellSpectrum avg = merged.average();
  write_spectrum_csv(ctx, "spectrum.csv", avg);

  const double beta =
      ctx.cfg.family == ForcingFamily::gevrey ? ctx.cfg.forcing_beta : 1.0;
  try {
    const DissipationFit fit = dissipation_scale_fit(avg, beta);
    ctx.check("dissipation_fit", true,
              "alpha_bar " + fmt_g(fit.alpha_bar) + " R^2 " + fmt_g(fit.r_squared));
    ctx.summary["dissipation"] = {{"alpha_bar", fit.alpha_bar},
                                  {"scale", fit.scale},
                                  {"r_squared", fit.r_squared},
                                  {"shells_used", fit.shells_used},
                                  {"gevrey_decay", fit.gevrey_decay},
                                  {"beta", beta}};
  } catch (const SpectrumError& e) {
    ctx.check("dissipation_fit", false, e.what());
  }
}

}  // namespace

const char* version_string() { return "0.1.0"; }

RunReport run_experiment(const ExperimentConfig& config,
                         const std::string& subcommand,
                         const RunOptions& options) {
  RunContext ctx;
  ctx.cfg = config;
  if (options.seed) ctx.cfg.sim.seed = *options.seed;
  if (options.output_dir) ctx.cfg.output_dir = *options.output_dir;
  ctx.cfg.validate();
  ctx.forcing = ctx.cfg.make_forcing();
  ctx.outdir = ctx.cfg.output_dir;
  ctx.threads = std::max(1, options.threads);
  ctx.resume = options.resume_checkpoint;
  ctx.config_hash = ctx.cfg.hash();
  fs::create_directories(ctx.outdir);

  if (subcommand == "simulate") run_simulate(ctx);
  else if (subcommand == "ou-validate") run_ou_validate(ctx);
  else if (subcommand == "moments") run_moments(ctx);
  else if (subcommand == "gevrey") run_gevrey(ctx);
  else if (subcommand == "kolmogorov") run_kolmogorov(ctx);
  else if (subcommand == "dissipation") run_dissipation(ctx);
  else throw std::invalid_argument("unknown subcommand: " + subcommand);

  RunReport report;
  report.blew_up = ctx.blew_up;
  report.checks = ctx.checks;
  report.ok = !ctx.blew_up;
  json checks = json::array();
  for (const auto& c : ctx.checks) {
    report.ok = report.ok && c.pass;
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  ctx.summary["checks"] = checks;
  ctx.summary["ok"] = report.ok;

  const fs::path sp = ctx.outdir / "summary.json";
  std::ofstream os(sp, std::ios::trunc);
  os << ctx.summary.dump(2) << "\n";
  ctx.files.push_back(sp.string());

  report.summary_json = ctx.summary.dump(2);
  report.files = ctx.files;
  return report;
}

}  // namespace sns3d
