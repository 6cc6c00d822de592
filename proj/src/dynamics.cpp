#include "sns3d/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace sns3d {

ForcingSpec ForcingSpec::power_law(std::shared_ptr<const Truncation> trunc,
                                   double r, double amplitude) {
  if (!(r > 0.0)) throw std::invalid_argument("forcing.r must be > 0");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("forcing.amplitude must be >= 0");
  ForcingSpec s;
  s.family = ForcingFamily::power_law;
  s.r = r;
  s.amplitude = amplitude;
  s.truncation = std::move(trunc);
  return s;
}

ForcingSpec ForcingSpec::gevrey(std::shared_ptr<const Truncation> trunc, double r,
                                double amplitude, GevreyParams params) {
  if (!(params.alpha > 0.0))
    throw std::invalid_argument("gevrey forcing needs alpha > 0");
  ForcingSpec s = power_law(std::move(trunc), r, amplitude);
  s.family = ForcingFamily::gevrey;
  s.gevrey_params = params;
  return s;
}

void ForcingSpec::set_deterministic_forcing(SpectralField g_field) {
  if (g_field.truncation().k_max() != truncation->k_max())
    throw std::invalid_argument("deterministic forcing truncation mismatch");
  const double div = g_field.max_divergence();
  const double scale = sobolev_norm(g_field, 0.0);
  if (div > 1e-10 * std::max(1.0, scale))
    throw std::invalid_argument("deterministic forcing is not divergence-free");
  g = std::move(g_field);
}

double noise_amplitude(const ForcingSpec& spec, const Wavevector& k) {
  if (!spec.truncation->contains(k))
    throw std::domain_error("wavevector outside forcing truncation");
  const double kn = k.norm();
  double sigma = spec.amplitude * std::pow(kn, -spec.r);
  if (spec.family == ForcingFamily::gevrey)
    sigma *= std::exp(-spec.gevrey_params.alpha *
                      std::pow(kn, spec.gevrey_params.beta));
  return sigma;
}

double noise_energy_rate(const ForcingSpec& spec) {
  const auto& tr = *spec.truncation;
  double sum = 0.0;
  for (std::size_t i = 0; i < tr.representative_count(); ++i) {
    const double sigma = noise_amplitude(spec, tr.rep(i));
    sum += 4.0 * sigma * sigma;  // +-k and two polarizations
  }
  return sum;
}

ForcingIntensities forcing_intensities(const ForcingSpec& spec, int p, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  const auto& tr = *spec.truncation;
  ForcingIntensities out;
  const bool is_gevrey = spec.family == ForcingFamily::gevrey;
  const GevreyParams gp = is_gevrey ? spec.gevrey_params : GevreyParams{0.0, 1.0};
  double gevrey_noise = 0.0;
  for (std::size_t i = 0; i < tr.representative_count(); ++i) {
    const double sigma = noise_amplitude(spec, tr.rep(i));
    const double s2 = sigma * sigma;
    const double n2 = static_cast<double>(tr.rep_norm2(i));
    out.noise_hp += 4.0 * std::pow(n2, static_cast<double>(p)) * s2;
    gevrey_noise += 4.0 * n2 * std::exp(2.0 * gp.alpha * std::pow(n2, 0.5 * gp.beta)) * s2;
  }
  double g_gevrey_sq = 0.0;
  if (spec.g) {
    const double gn = sobolev_norm(*spec.g, static_cast<double>(p) - 1.0);
    out.g_hpm1_sq = gn * gn;
    const double gg = gevrey_norm(*spec.g, gp);
    g_gevrey_sq = gg * gg;
  }
  out.combined = out.noise_hp + out.g_hpm1_sq;
  out.combined_visc = out.noise_hp + out.g_hpm1_sq / nu;
  out.gevrey = gevrey_noise + g_gevrey_sq;
  return out;
}

SpectralField nonlinear_term(const SpectralField& u) {
  const auto& tr = u.truncation();
  const int n = dealias_grid_size(tr.k_max());
  const PhysicalField phys = transform_to_physical(u, n);
  const std::size_t nr = static_cast<std::size_t>(n) * n * n;

  SpectralField b(u.truncation_ptr());

  // divergence form: B_i(k) = i sum_j k_j w_ij(k), w_ij = FT(u_i u_j);
  // the grid is alias-free for quadratic products, so w is exact
  std::vector<double> prod(nr);
  const int pairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (const auto& pr : pairs) {
    const int a = pr[0];
    const int c = pr[1];
    const double* ua = phys.data.data() + static_cast<std::size_t>(a) * nr;
    const double* uc = phys.data.data() + static_cast<std::size_t>(c) * nr;
    for (std::size_t j = 0; j < nr; ++j) prod[j] = ua[j] * uc[j];

    const std::vector<Complex> w = scalar_to_spectral(prod, n, tr);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto& k = tr.rep(i);
      const double kcomp[3] = {static_cast<double>(k.kx),
                               static_cast<double>(k.ky),
                               static_cast<double>(k.kz)};
      const Complex iw{-w[i].imag(), w[i].real()};
      b.coeff(i)[a] += kcomp[c] * iw;
      if (a != c) b.coeff(i)[c] += kcomp[a] * iw;
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i)
    b.coeff(i) = leray_project(b.coeff(i), tr.rep(i));
  return b;
}

SpectralField galerkin_drift(const SpectralField& u, const ForcingSpec& spec,
                             double nu) {
  const auto& tr = u.truncation();
  SpectralField drift = nonlinear_term(u);
  for (std::size_t i = 0; i < drift.size(); ++i) {
    const double visc = nu * static_cast<double>(tr.rep_norm2(i));
    for (int c = 0; c < 3; ++c) {
      Complex v = -visc * u.coeff(i)[c] - drift.coeff(i)[c];
      if (spec.g) v += spec.g->coeff(i)[c];
      drift.coeff(i)[c] = v;
    }
  }
  return drift;
}

}  // namespace sns3d
