#pragma once

// Galerkin drift of the stochastic Navier-Stokes system: the dealiased
// nonlinear term, the viscous term, deterministic forcing g and the
// diagonal spectral noise covariance with its intensity constants.

#include <memory>
#include <optional>

#include "sns3d/spectral.hpp"

namespace sns3d {

enum class ForcingFamily { power_law, gevrey };

// Additive noise, diagonal in the solenoidal Fourier basis, identical on
// both polarizations:
//   power_law: sigma_k = amplitude |k|^{-r}
//   gevrey:    sigma_k = amplitude |k|^{-r} e^{-a |k|^b}
struct ForcingSpec {
  ForcingFamily family = ForcingFamily::power_law;
  double r = 1.0;
  double amplitude = 1.0;
  GevreyParams gevrey_params{0.0, 1.0};
  std::shared_ptr<const Truncation> truncation;
  std::optional<SpectralField> g;  // deterministic forcing, may be absent

  static ForcingSpec power_law(std::shared_ptr<const Truncation> trunc,
                               double r, double amplitude);
  static ForcingSpec gevrey(std::shared_ptr<const Truncation> trunc, double r,
                            double amplitude, GevreyParams params);
  // g must already be divergence-free on the same truncation (validated,
  // not projected silently).
  void set_deterministic_forcing(SpectralField g_field);
};

// sigma_k; throws std::domain_error when k is outside the truncation.
double noise_amplitude(const ForcingSpec& spec, const Wavevector& k);

// sum over the full symmetric mode set and both polarizations of sigma_k^2
// (the white-noise energy input rate).
double noise_energy_rate(const ForcingSpec& spec);

// Forcing intensity constants at Sobolev order p:
//   combined      = sum_{k,pol} |k|^{2p} sigma_k^2 + ||g||_{p-1}^2
//   combined_visc = sum_{k,pol} |k|^{2p} sigma_k^2 + ||g||_{p-1}^2 / nu
//   gevrey        = sum_{k,pol} |k|^2 e^{2a|k|^b} sigma_k^2 + ||g||_G^2
struct ForcingIntensities {
  double noise_hp = 0.0;
  double g_hpm1_sq = 0.0;
  double combined = 0.0;
  double combined_visc = 0.0;
  double gevrey = 0.0;
};
ForcingIntensities forcing_intensities(const ForcingSpec& spec, int p, double nu);

// P_N pi((u.grad)u), computed pseudo-spectrally in divergence form with an
// alias-free grid (>= 3 k_max + 1 per axis); Leray projection applied last.
SpectralField nonlinear_term(const SpectralField& u);

// -nu A u - P_N B(u) + P_N g, mode-wise -nu|k|^2 u(k) - B(u)(k) + g(k)
SpectralField galerkin_drift(const SpectralField& u, const ForcingSpec& spec,
                             double nu);

}  // namespace sns3d
