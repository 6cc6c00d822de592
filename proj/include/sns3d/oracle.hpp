#pragma once

// Independent references used by the validation suites: the linear Stokes
// Ornstein-Uhlenbeck process with its closed-form Gaussian stationary law,
// the direct-convolution nonlinearity, and a bisection root finder. These
// paths deliberately share no kernels with the main implementation
// (separate summation order, no FFT).

#include <functional>
#include <memory>

#include "sns3d/dynamics.hpp"
#include "sns3d/rng.hpp"
#include "sns3d/spectral.hpp"

namespace sns3d {

// Linear stochastic Stokes configuration: nonlinearity off, g = 0.
struct OuSpec {
  double nu = 0.5;
  ForcingSpec forcing;

  // throws std::invalid_argument when forcing carries a deterministic part
  static OuSpec make(double nu, ForcingSpec forcing);
};

// E ||X||_m^2 = sum_{k,pol} |k|^{2m} sigma_k^2 / (2 nu |k|^2)
double ou_exact_second_moment(const OuSpec& spec, double m);

// Exact draw from the stationary Gaussian law, no time stepping: each mode
// and polarization gets an independent complex Gaussian with variance
// sigma_k^2 / (2 nu |k|^2).
SpectralField ou_sample_stationary(const OuSpec& spec, RngStream& rng);

// Exact truncated convolution B(k) = pi_k sum_h i (u(h).(k-h)) u(k-h),
// quadratic in the mode count; refuses truncations beyond the guard.
SpectralField nonlinear_term_direct(const SpectralField& u,
                                    std::size_t max_representatives = 1024);

// Bisection to 1e-12 absolute; throws std::domain_error without a sign
// change on [lo, hi].
double scalar_root(const std::function<double(double)>& f, double lo,
                   double hi, double tol = 1e-12);

}  // namespace sns3d
