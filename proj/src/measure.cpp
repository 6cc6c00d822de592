#include "sns3d/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sns3d {

MomentAccumulator::MomentAccumulator(std::string id, std::size_t target_batches)
    : id_(std::move(id)), target_batches_(std::max<std::size_t>(target_batches, 4)) {}

void MomentAccumulator::add(double value) {
  ++count_;
  const double delta = value - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (value - mean_);

  batch_sum_ += value;
  if (++batch_fill_ == batch_size_) close_batch();
}

void MomentAccumulator::close_batch() {
  batches_.push_back(batch_sum_ / static_cast<double>(batch_size_));
  batch_sum_ = 0.0;
  batch_fill_ = 0;
  if (batches_.size() >= 2 * target_batches_) {
    std::vector<double> merged;
    merged.reserve(batches_.size() / 2);
    for (std::size_t i = 0; i + 1 < batches_.size(); i += 2)
      merged.push_back(0.5 * (batches_[i] + batches_[i + 1]));
    batches_ = std::move(merged);
    batch_size_ *= 2;
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / (na + nb);
  m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
  count_ += other.count_;
  // independent members: their batches are independent samples of the mean
  batches_.insert(batches_.end(), other.batches_.begin(), other.batches_.end());
  if (other.batch_fill_ > 0)
    batches_.push_back(other.batch_sum_ / static_cast<double>(other.batch_fill_));
}

double MomentAccumulator::mean() const { return count_ ? mean_ : 0.0; }

double MomentAccumulator::variance() const {
  return count_ ? m2_ / static_cast<double>(count_) : 0.0;
}

double MomentAccumulator::stderr_batch() const {
  if (batches_.size() >= 2) {
    double bm = 0.0;
    for (double b : batches_) bm += b;
    bm /= static_cast<double>(batches_.size());
    double var = 0.0;
    for (double b : batches_) var += (b - bm) * (b - bm);
    var /= static_cast<double>(batches_.size() - 1);
    return std::sqrt(var / static_cast<double>(batches_.size()));
  }
  if (count_ > 1)
    return std::sqrt(variance() / static_cast<double>(count_));
  return std::numeric_limits<double>::quiet_NaN();
}

double regularity_statistic(const SpectralField& x, int p) {
  if (p < 1) throw std::domain_error("regularity statistic needs p >= 1");
  const double n = sobolev_norm(x, static_cast<double>(p) + 1.0);
  return std::pow(n, 2.0 / (2.0 * p + 1.0));
}

double lyapunov_moment(const SpectralField& x, int p, double nu) {
  if (p < 1) throw std::domain_error("lyapunov moment needs p >= 1");
  const double n = sobolev_norm(x, static_cast<double>(p));
  return nu * std::pow(1.0 + n * n, 1.0 / (2.0 * p - 1.0));
}

double smoothing_ratio(const SpectralField& x, int p, double nu) {
  if (p < 1) throw std::domain_error("smoothing ratio needs p >= 1");
  const double np = sobolev_norm(x, static_cast<double>(p));
  const double np1 = sobolev_norm(x, static_cast<double>(p) + 1.0);
  const double eps = 1.0 / (2.0 * p - 1.0);
  return nu * (1.0 + np1 * np1) / std::pow(1.0 + np * np, 1.0 + eps);
}

EnergyBalance energy_balance(const MomentAccumulator& h1_sq_acc,
                             const ForcingIntensities& at_p0, double nu) {
  EnergyBalance out;
  out.mean_h1_sq = h1_sq_acc.mean();
  out.noise_rate = at_p0.noise_hp;
  out.residual = 2.0 * nu * out.mean_h1_sq - out.noise_rate;
  out.relative = out.noise_rate > 0.0
                     ? out.residual / out.noise_rate
                     : (out.residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  out.bound_holds = nu * out.mean_h1_sq <= at_p0.combined_visc + 1e-12;
  return out;
}

double analyticity_radius(const SpectralField& x, double nu, double beta,
                          double bbar0, double alpha_cap, double rel_tol) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::domain_error("nu must be in (0,1]");
  if (!(alpha_cap > 0.0)) throw std::domain_error("alpha_cap must be > 0");
  const double level = 4.0 * (bbar0 + 1.0);
  // F(s) = ||x||^2_{G(nu s, beta)} - level/(nu sqrt(s)): increasing minus
  // decreasing, so at most one sign change on (0, cap]
  auto f = [&](double s) {
    const double g = gevrey_norm_detail(x, GevreyParams{nu * s, beta}).value;
    return g * g - level / (nu * std::sqrt(s));
  };
  if (f(alpha_cap) <= 0.0) return alpha_cap;  // no crossing below the cap
  double lo = alpha_cap;
  double hi = alpha_cap;
  // walk the bracket down until F(lo) < 0 (guaranteed as s -> 0+)
  for (int i = 0; i < 1200 && f(lo) > 0.0; ++i) {
    hi = lo;
    lo *= 0.5;
  }
  for (int i = 0; i < 200 && (hi - lo) > rel_tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

GevreyBudget gevrey_budget(const SpectralField& x, double t, double nu,
                           double beta, const ForcingSpec& spec) {
  if (!(t >= 0.0)) throw std::domain_error("budget time must be >= 0");
  const GevreyParams radius{nu * t, beta};
  GevreyBudget out;
  out.t = t;

  const SpectralField b = nonlinear_term(x);
  out.i_b = -gevrey_inner(x, b, radius);
  out.i_g = spec.g ? gevrey_inner(*spec.g, x, radius) : 0.0;

  const auto& tr = x.truncation();
  double i_phi = 0.0;
  for (std::size_t i = 0; i < tr.representative_count(); ++i) {
    const double sigma = noise_amplitude(spec, tr.rep(i));
    const double n2 = static_cast<double>(tr.rep_norm2(i));
    i_phi += 4.0 * n2 *
             std::exp(2.0 * radius.alpha * std::pow(n2, 0.5 * beta)) * sigma * sigma;
  }
  out.i_phi = i_phi;

  const auto gn = gevrey_norm_detail(x, radius);
  out.gevrey_sq = gn.value * gn.value;
  const auto dn = gevrey_norm_detail(apply_A_power(x, 0.5), radius);
  out.dissipation = dn.value * dn.value;
  out.overflowed = gn.log_domain || dn.log_domain;
  return out;
}

double log_plus_moment(const SpectralField& x, double alpha_prime,
                       double beta_prime, double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be > 0");
  const auto gn = gevrey_norm_detail(x, GevreyParams{alpha_prime, beta_prime});
  if (gn.value == 0.0) return 0.0;
  const double log_sq = 2.0 * gn.log_value;
  return log_sq <= 0.0 ? 0.0 : std::pow(log_sq, gamma);
}

double gevrey_interp_constant(double beta, double beta_prime) {
  if (!(beta_prime > 0.0 && beta_prime < beta && beta <= 1.0))
    throw std::domain_error("need 0 < beta' < beta <= 1");
  return ((beta - beta_prime) / beta) *
         std::pow(beta_prime / beta, beta_prime / (beta - beta_prime));
}

bool check_gevrey_interpolation(const SpectralField& x, double alpha,
                                double alpha_prime, double beta,
                                double beta_prime) {
  if (!(alpha > 0.0 && alpha_prime > 0.0))
    throw std::domain_error("need alpha, alpha' > 0");
  const double c = gevrey_interp_constant(beta, beta_prime);
  const double exponent = c * std::pow(alpha_prime, beta / (beta - beta_prime)) *
                          std::pow(alpha, -beta_prime / (beta - beta_prime));
  const auto lhs = gevrey_norm_detail(x, GevreyParams{alpha_prime, beta_prime});
  const auto rhs = gevrey_norm_detail(x, GevreyParams{alpha, beta});
  if (lhs.value == 0.0) return true;
  // compare in the log domain; tiny slack absorbs roundoff at near-tightness
  return lhs.log_value <= exponent + rhs.log_value + 1e-12;
}

GevreyExitTracker::GevreyExitTracker(double nu, double beta, double horizon)
    : nu_(nu), beta_(beta), horizon_(horizon) {
  rec_.horizon = horizon;
}

void GevreyExitTracker::observe(double window_time, const SpectralField& x) {
  if (triggered_ || window_time > horizon_) return;
  const auto gn = gevrey_norm_detail(x, GevreyParams{nu_ * window_time, beta_});
  const double g_sq = gn.value * gn.value;
  if (!seen_initial_) {
    seen_initial_ = true;
    const double h1 = sobolev_norm(x, 1.0);
    rec_.initial_h1_sq = h1 * h1;
  }
  if (1.0 + g_sq > 4.0 * (rec_.initial_h1_sq + 1.0)) {
    triggered_ = true;
    rec_.tau = window_time;
    rec_.censored = false;
    return;
  }
  rec_.sup_gevrey_sq = std::max(rec_.sup_gevrey_sq, g_sq);
}

GevreyExitTracker::Record GevreyExitTracker::record() const {
  Record r = rec_;
  if (!triggered_) {
    r.censored = true;
    r.tau = horizon_;
  }
  return r;
}

TauCdfFit fit_tau_cdf(const std::vector<TauSample>& samples, double horizon) {
  TauCdfFit out;
  out.small_t_range = horizon / 8.0;
  std::vector<double> taus;
  for (const auto& s : samples)
    if (!s.censored) {
      taus.push_back(s.tau);
      if (s.tau <= out.small_t_range) ++out.small_t_events;
    }
  out.all_censored = taus.empty();
  if (out.all_censored) return out;
  std::sort(taus.begin(), taus.end());

  const double n = static_cast<double>(samples.size());
  // empirical CDF points on the small-t range (CDF <= 1/2)
  std::vector<std::pair<double, double>> pts;  // (t, P(tau < t))
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double cdf = static_cast<double>(i + 1) / n;
    if (taus[i] <= 0.0) continue;
    pts.emplace_back(taus[i], cdf);
    if (cdf > 0.5) break;
  }
  if (pts.size() < 4) {
    out.points_used = pts.size();
    return out;
  }
  // least squares through the origin for P = a sqrt(t)
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [t, p] : pts) {
    const double rt = std::sqrt(t);
    sxy += rt * p;
    sxx += rt * rt;
  }
  out.a = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0, pbar = 0.0;
  for (const auto& [t, p] : pts) pbar += p;
  pbar /= static_cast<double>(pts.size());
  for (const auto& [t, p] : pts) {
    const double fit = out.a * std::sqrt(t);
    ss_res += (p - fit) * (p - fit);
    ss_tot += (p - pbar) * (p - pbar);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  out.points_used = pts.size();
  return out;
}

ShellSpectrum shell_spectrum(const SpectralField& x) {
  const auto& tr = x.truncation();
  ShellSpectrum out;
  out.k_max = tr.k_max();
  std::vector<ShellStats> shells(tr.k_max() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double kn = tr.rep(i).norm();
    const int shell = static_cast<int>(std::floor(kn + 0.5));
    if (shell < 1 || shell > tr.k_max()) continue;
    auto& st = shells[shell];
    st.shell = shell;
    const auto& c = x.coeff(i);
    const double amp = std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]));
    st.mode_count += 2;  // +-k carry equal magnitudes
    st.mean_amplitude += 2.0 * amp;
    constexpr double kFloor = 1e-300;  // keeps the log finite for empty modes
    st.mean_log_amplitude += 2.0 * std::log(std::max(amp, kFloor));
    st.norms2.push_back(tr.rep_norm2(i));
  }
  for (auto& st : shells) {
    if (st.mode_count == 0) continue;
    st.mean_amplitude /= static_cast<double>(st.mode_count);
    st.mean_log_amplitude /= static_cast<double>(st.mode_count);
    out.shells.push_back(std::move(st));
  }
  return out;
}

DissipationFit dissipation_scale_fit(const ShellSpectrum& spectrum, double beta,
                                     double noise_floor_ratio) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("beta must be in (0,1]");
  double peak = 0.0;
  for (const auto& st : spectrum.shells) peak = std::max(peak, st.mean_amplitude);
  const double floor = noise_floor_ratio * peak;

  // regress shell-mean(ln amp + ln|k|) on shell-mean(|k|^beta); exact for
  // amplitude laws A |k|^{-1} e^{-abar |k|^beta}
  std::vector<double> xs, ys;
  for (const auto& st : spectrum.shells) {
    if (st.mean_amplitude <= floor || st.mode_count == 0) continue;
    double mean_kb = 0.0, mean_log_k = 0.0;
    for (int n2 : st.norms2) {
      mean_kb += 2.0 * std::pow(static_cast<double>(n2), 0.5 * beta);
      mean_log_k += std::log(static_cast<double>(n2));  // 2 * 0.5 * log
    }
    mean_kb /= static_cast<double>(st.mode_count);
    mean_log_k /= static_cast<double>(st.mode_count);
    xs.push_back(mean_kb);
    ys.push_back(st.mean_log_amplitude + mean_log_k);
  }
  if (xs.size() < 4)
    throw SpectrumError("dissipation fit needs at least 4 shells above the noise floor, got " +
                        std::to_string(xs.size()));

  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  DissipationFit out;
  out.alpha_bar = -slope;
  out.shells_used = static_cast<int>(xs.size());
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = intercept + slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  out.gevrey_decay = out.alpha_bar > 1e-3;
  out.scale = out.alpha_bar > 0.0 ? std::pow(out.alpha_bar, -1.0 / beta)
                                  : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace sns3d
