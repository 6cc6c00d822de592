#include "sns3d/kolmogorov.hpp"

#include <cmath>
#include <stdexcept>

namespace sns3d {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// real orthonormal basis of the truncated solenoidal space: per
// representative mode and polarization, a cosine-type and a sine-type
// vector, each of unit coefficient norm over the full symmetric set
SpectralField basis_vector(const std::shared_ptr<const Truncation>& trunc,
                           std::size_t rep, int pol, bool sine) {
  SpectralField e(trunc);
  const Vec3& eps = pol == 0 ? trunc->pol1(rep) : trunc->pol2(rep);
  const Complex unit = sine ? Complex{0.0, kInvSqrt2} : Complex{kInvSqrt2, 0.0};
  for (int c = 0; c < 3; ++c) e.coeff(rep)[c] = unit * eps[c];
  return e;
}

}  // namespace

double TestFunctional::hessian_trace(const SpectralField& x,
                                     const ForcingSpec& spec) const {
  const auto& trunc = x.truncation_ptr();
  double tr = 0.0;
  for (std::size_t i = 0; i < trunc->representative_count(); ++i) {
    const double sigma = noise_amplitude(spec, trunc->rep(i));
    if (sigma == 0.0) continue;
    const double s2 = sigma * sigma;
    for (int pol = 0; pol < 2; ++pol) {
      tr += s2 * hessian_quadform(x, basis_vector(trunc, i, pol, false));
      tr += s2 * hessian_quadform(x, basis_vector(trunc, i, pol, true));
    }
  }
  return tr;
}

LyapunovFunctional::LyapunovFunctional(int p) : p_(p), eps_(1.0 / (2.0 * p - 1.0)) {
  if (p < 1) throw std::domain_error("Lyapunov functional needs p >= 1");
}

double LyapunovFunctional::value(const SpectralField& x) const {
  const double n = sobolev_norm(x, static_cast<double>(p_));
  return std::pow(1.0 + n * n, -eps_);
}

SpectralField LyapunovFunctional::gradient(const SpectralField& x) const {
  const double n = sobolev_norm(x, static_cast<double>(p_));
  const double scale = -2.0 * eps_ * std::pow(1.0 + n * n, -eps_ - 1.0);
  SpectralField g = apply_A_power(x, static_cast<double>(p_));
  g *= scale;
  return g;
}

double LyapunovFunctional::hessian_quadform(const SpectralField& x,
                                            const SpectralField& h) const {
  const double n = sobolev_norm(x, static_cast<double>(p_));
  const double base = 1.0 + n * n;
  const double nh = sobolev_norm(h, static_cast<double>(p_));
  const double cross = sobolev_inner(apply_A_power(x, static_cast<double>(p_)), h, 0.0);
  return -2.0 * eps_ * std::pow(base, -eps_ - 1.0) * nh * nh +
         4.0 * eps_ * (eps_ + 1.0) * std::pow(base, -eps_ - 2.0) * cross * cross;
}

double LyapunovFunctional::hessian_trace(const SpectralField& x,
                                         const ForcingSpec& spec) const {
  // closed form of the basis sum: each (mode, pol) contributes
  //   sigma^2 (-4 eps f1 lam^p + 8 eps(eps+1) f2 lam^{2p} |eps_pol . x(k)|^2)
  const auto& tr = x.truncation();
  const double n = sobolev_norm(x, static_cast<double>(p_));
  const double base = 1.0 + n * n;
  const double f1 = std::pow(base, -eps_ - 1.0);
  const double f2 = std::pow(base, -eps_ - 2.0);
  double total = 0.0;
  for (std::size_t i = 0; i < tr.representative_count(); ++i) {
    const double sigma = noise_amplitude(spec, tr.rep(i));
    if (sigma == 0.0) continue;
    const double s2 = sigma * sigma;
    const double lam_p = std::pow(static_cast<double>(tr.rep_norm2(i)),
                                  static_cast<double>(p_));
    const auto& c = x.coeff(i);
    for (int pol = 0; pol < 2; ++pol) {
      const Vec3& eps_pol = pol == 0 ? tr.pol1(i) : tr.pol2(i);
      const Complex proj = eps_pol[0] * c[0] + eps_pol[1] * c[1] + eps_pol[2] * c[2];
      total += s2 * (-4.0 * eps_ * f1 * lam_p +
                     8.0 * eps_ * (eps_ + 1.0) * f2 * lam_p * lam_p * std::norm(proj));
    }
  }
  return total;
}

double QuadraticEnergyFunctional::value(const SpectralField& x) const {
  const double n = sobolev_norm(x, 0.0);
  return n * n;
}

SpectralField QuadraticEnergyFunctional::gradient(const SpectralField& x) const {
  SpectralField g = x;
  g *= 2.0;
  return g;
}

double QuadraticEnergyFunctional::hessian_quadform(const SpectralField&,
                                                   const SpectralField& h) const {
  const double n = sobolev_norm(h, 0.0);
  return 2.0 * n * n;
}

double QuadraticEnergyFunctional::hessian_trace(const SpectralField&,
                                                const ForcingSpec& spec) const {
  return 2.0 * noise_energy_rate(spec);
}

LinearComboFunctional::LinearComboFunctional(
    double c1, std::shared_ptr<const TestFunctional> f1, double c2,
    std::shared_ptr<const TestFunctional> f2)
    : c1_(c1), c2_(c2), f1_(std::move(f1)), f2_(std::move(f2)) {}

double LinearComboFunctional::value(const SpectralField& x) const {
  return c1_ * f1_->value(x) + c2_ * f2_->value(x);
}

SpectralField LinearComboFunctional::gradient(const SpectralField& x) const {
  SpectralField g1 = f1_->gradient(x);
  g1 *= c1_;
  SpectralField g2 = f2_->gradient(x);
  g2 *= c2_;
  g1 += g2;
  return g1;
}

double LinearComboFunctional::hessian_quadform(const SpectralField& x,
                                               const SpectralField& h) const {
  return c1_ * f1_->hessian_quadform(x, h) + c2_ * f2_->hessian_quadform(x, h);
}

double LinearComboFunctional::hessian_trace(const SpectralField& x,
                                            const ForcingSpec& spec) const {
  return c1_ * f1_->hessian_trace(x, spec) + c2_ * f2_->hessian_trace(x, spec);
}

double apply_generator(const SpectralField& x, const TestFunctional& f,
                       const ForcingSpec& spec, double nu, bool nonlinear) {
  SpectralField drift(x.truncation_ptr());
  if (nonlinear) {
    drift = galerkin_drift(x, spec, nu);
  } else {
    const auto& tr = x.truncation();
    for (std::size_t i = 0; i < drift.size(); ++i) {
      const double visc = nu * static_cast<double>(tr.rep_norm2(i));
      for (int c = 0; c < 3; ++c) {
        Complex v = -visc * x.coeff(i)[c];
        if (spec.g) v += spec.g->coeff(i)[c];
        drift.coeff(i)[c] = v;
      }
    }
  }
  return 0.5 * f.hessian_trace(x, spec) + sobolev_inner(drift, f.gradient(x), 0.0);
}

GeneratorResidual::GeneratorResidual(std::shared_ptr<const TestFunctional> f,
                                     ForcingSpec spec, double nu, std::string id,
                                     bool nonlinear)
    : f_(std::move(f)),
      spec_(std::move(spec)),
      nu_(nu),
      nonlinear_(nonlinear),
      acc_(std::move(id)) {}

void GeneratorResidual::add(const SpectralField& x) {
  acc_.add(apply_generator(x, *f_, spec_, nu_, nonlinear_));
}

void GeneratorResidual::add_value(double generator_value) {
  acc_.add(generator_value);
}

void GeneratorResidual::merge(const GeneratorResidual& other) {
  acc_.merge(other.acc_);
}

}  // namespace sns3d
