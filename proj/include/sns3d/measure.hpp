#pragma once

// Invariant-measure statistics: online moment accumulation with
// batch-means error bars, the regularity and Lyapunov-moment statistics,
// the Gevrey budget and stopping-time machinery, the analyticity-radius
// functional and the dissipation-scale spectrum fit.

#include <cstddef>
#include <string>
#include <vector>

#include "sns3d/dynamics.hpp"
#include "sns3d/spectral.hpp"

namespace sns3d {

// Online mean/variance (Welford) plus batch means for autocorrelation-aware
// standard errors. Batches double in size once the target count is reached;
// merging concatenates batch lists, so ensemble combines stay associative.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::string id = {}, std::size_t target_batches = 64);

  void add(double value);
  void merge(const MomentAccumulator& other);

  const std::string& id() const { return id_; }
  std::uint64_t count() const { return count_; }
  double mean() const;
  double variance() const;  // population variance of the samples
  // standard error from batch means; falls back to iid stderr when fewer
  // than two complete batches exist
  double stderr_batch() const;
  std::size_t batch_count() const { return batches_.size(); }
  const std::vector<double>& batch_means() const { return batches_; }

 private:
  void close_batch();
  std::string id_;
  std::size_t target_batches_;
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::uint64_t batch_size_ = 1;
  std::uint64_t batch_fill_ = 0;
  double batch_sum_ = 0.0;
  std::vector<double> batches_;
};

// ||x||_{p+1}^{2/(2p+1)} — the fractional regularity statistic whose
// stationary average stays bounded for admissible forcing.
double regularity_statistic(const SpectralField& x, int p);

// nu (1 + ||x||_p^2)^{1/(2p-1)}
double lyapunov_moment(const SpectralField& x, int p, double nu);

// nu (1 + ||x||_{p+1}^2) / (1 + ||x||_p^2)^{1 + 1/(2p-1)}
double smoothing_ratio(const SpectralField& x, int p, double nu);

struct EnergyBalance {
  double mean_h1_sq = 0.0;  // time average of ||X||_1^2
  double noise_rate = 0.0;  // sum_{k,pol} sigma_k^2
  double residual = 0.0;    // 2 nu mean - noise_rate (signed)
  double relative = 0.0;    // residual / noise_rate
  bool bound_holds = false; // nu mean <= combined_visc at p=0
};
// Exact-identity form assumes g = 0; the one-sided bound holds regardless.
EnergyBalance energy_balance(const MomentAccumulator& h1_sq_acc,
                             const ForcingIntensities& at_p0, double nu);

// alpha_nu(x): smallest s with ||x||_{G(nu s, beta)}^2 > 4 (bbar0 + 1) /
// (nu sqrt(s)), located by bisection of the monotone crossing and clamped
// to (0, alpha_cap].
double analyticity_radius(const SpectralField& x, double nu, double beta,
                          double bbar0, double alpha_cap,
                          double rel_tol = 1e-10);

struct GevreyBudget {
  double t = 0.0;
  double i_b = 0.0;         // -(x, B(x))_{G(nu t, beta)}
  double i_g = 0.0;         // (g, x)_{G(nu t, beta)}
  double i_phi = 0.0;       // sum_{k,pol} |k|^2 e^{2 nu t |k|^beta} sigma_k^2
  double gevrey_sq = 0.0;   // ||x||^2_{G(nu t, beta)}
  double dissipation = 0.0; // ||A^{1/2} x||^2_{G(nu t, beta)}
  bool overflowed = false;
};
GevreyBudget gevrey_budget(const SpectralField& x, double t, double nu,
                           double beta, const ForcingSpec& spec);

// (ln+ ||x||^2_{G(a',b')})^gamma with ln+ r = max(0, ln r), evaluated in
// the log domain so large norms are safe.
double log_plus_moment(const SpectralField& x, double alpha_prime,
                       double beta_prime, double gamma);

// sharp constant c(b,b') = ((b-b')/b) (b'/b)^{b'/(b-b')} of the Young bound
// a' r^{b'} <= c(b,b') a'^{b/(b-b')} a^{-b'/(b-b')} + a r^b.
// Throws std::domain_error unless 0 < b' < b <= 1.
double gevrey_interp_constant(double beta, double beta_prime);

// ||x||_{G(a',b')} <= exp(c(b,b') a'^{b/(b-b')} a^{-b'/(b-b')}) ||x||_{G(a,b)}
bool check_gevrey_interpolation(const SpectralField& x, double alpha,
                                double alpha_prime, double beta,
                                double beta_prime);

// First sampled time with 1 + ||X(t)||^2_{G(nu t, beta)} beyond four times
// the initial energy level 1 + ||X(0)||_1^2; censored at the horizon.
class GevreyExitTracker {
 public:
  GevreyExitTracker(double nu, double beta, double horizon);
  void observe(double window_time, const SpectralField& x);

  struct Record {
    double tau = 0.0;
    bool censored = true;
    double sup_gevrey_sq = 0.0;  // sup over sampled t < tau
    double initial_h1_sq = 0.0;
    double horizon = 0.0;
  };
  Record record() const;
  bool triggered() const { return triggered_; }

 private:
  double nu_, beta_, horizon_;
  bool seen_initial_ = false;
  bool triggered_ = false;
  Record rec_;
};

struct TauSample {
  double tau = 0.0;
  bool censored = true;
  double sup_gevrey_sq = 0.0;
  double initial_h1_sq = 0.0;
};

struct StoppingRecord {
  std::vector<TauSample> tau_samples;
  std::vector<double> alpha_nu_samples;
  double horizon = 0.0;
};

// Least-squares fit of a t^{1/2} through the origin over the onset of the
// empirical CDF of tau (points with CDF in (0, 1/2], at least 4 needed).
// The factor-4 exit threshold keeps the true CDF exponentially flat near
// t = 0, so the pre-declared small-t window [0, horizon/8] is also checked:
// small_t_events == 0 means the CDF is identically zero there.
struct TauCdfFit {
  double a = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  bool all_censored = true;
  double small_t_range = 0.0;       // horizon / 8
  std::size_t small_t_events = 0;   // exits inside [0, small_t_range]
};
TauCdfFit fit_tau_cdf(const std::vector<TauSample>& samples, double horizon);

struct ShellStats {
  int shell = 0;                 // integer shell [n-1/2, n+1/2) on |k|
  std::size_t mode_count = 0;    // lattice modes in the shell, full set
  double mean_amplitude = 0.0;   // mean |coeff| over the shell
  double mean_log_amplitude = 0.0;
  std::vector<int> norms2;       // |k|^2 multiset over representatives
};
struct ShellSpectrum {
  int k_max = 0;
  std::vector<ShellStats> shells;
};
ShellSpectrum shell_spectrum(const SpectralField& x);

class SpectrumError : public std::runtime_error {
 public:
  explicit SpectrumError(const std::string& what) : std::runtime_error(what) {}
};

// Fits shell-mean of ln|coeff| + ln|k| against -abar |k|^beta over shells
// above the noise floor (1e-13 x peak by default). scale = abar^{-1/beta}.
// Throws SpectrumError with a diagnostic when fewer than 4 shells qualify.
struct DissipationFit {
  double alpha_bar = 0.0;
  double scale = 0.0;      // +inf when no exponential decay is present
  double r_squared = 0.0;
  int shells_used = 0;
  bool gevrey_decay = false;  // alpha_bar above the non-Gevrey floor 1e-3
};
DissipationFit dissipation_scale_fit(const ShellSpectrum& spectrum, double beta,
                                     double noise_floor_ratio = 1e-13);

}  // namespace sns3d
