#include "sns3d/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace sns3d {

OuSpec OuSpec::make(double nu, ForcingSpec forcing) {
  if (forcing.g && !forcing.g->is_zero())
    throw std::invalid_argument("linear Stokes reference requires g = 0");
  OuSpec s;
  s.nu = nu;
  s.forcing = std::move(forcing);
  return s;
}

double ou_exact_second_moment(const OuSpec& spec, double m) {
  const auto& tr = *spec.forcing.truncation;
  double sum = 0.0;
  for (std::size_t i = 0; i < tr.representative_count(); ++i) {
    const double sigma = noise_amplitude(spec.forcing, tr.rep(i));
    const double n2 = static_cast<double>(tr.rep_norm2(i));
    // 4 = two polarizations on each of +-k
    sum += 4.0 * std::pow(n2, m) * sigma * sigma / (2.0 * spec.nu * n2);
  }
  return sum;
}

SpectralField ou_sample_stationary(const OuSpec& spec, RngStream& rng) {
  const auto trunc = spec.forcing.truncation;
  SpectralField out(trunc);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sigma = noise_amplitude(spec.forcing, trunc->rep(i));
    const double n2 = static_cast<double>(trunc->rep_norm2(i));
    const double std_dev = sigma / std::sqrt(2.0 * spec.nu * n2);
    const Complex z1 = std_dev * rng.complex_gaussian();
    const Complex z2 = std_dev * rng.complex_gaussian();
    const Vec3& e1 = trunc->pol1(i);
    const Vec3& e2 = trunc->pol2(i);
    for (int c = 0; c < 3; ++c) out.coeff(i)[c] = z1 * e1[c] + z2 * e2[c];
  }
  return out;
}

namespace {

struct KeyHash {
  std::size_t operator()(std::int64_t k) const noexcept {
    return std::hash<std::int64_t>()(k);
  }
};

std::int64_t pack_key(int kx, int ky, int kz) {
  return (static_cast<std::int64_t>(kx + (1 << 20)) << 42) |
         (static_cast<std::int64_t>(ky + (1 << 20)) << 21) |
         static_cast<std::int64_t>(kz + (1 << 20));
}

}  // namespace

SpectralField nonlinear_term_direct(const SpectralField& u,
                                    std::size_t max_representatives) {
  const auto& tr = u.truncation();
  if (tr.representative_count() > max_representatives)
    throw std::domain_error("direct convolution refused: truncation too large");

  // dense table over the full symmetric set, conjugates materialized
  std::unordered_map<std::int64_t, Vec3c, KeyHash> table;
  table.reserve(2 * u.size());
  std::vector<Wavevector> modes;
  modes.reserve(2 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& k = tr.rep(i);
    const auto& c = u.coeff(i);
    table[pack_key(k.kx, k.ky, k.kz)] = c;
    const Vec3c cc{std::conj(c[0]), std::conj(c[1]), std::conj(c[2])};
    table[pack_key(-k.kx, -k.ky, -k.kz)] = cc;
    modes.push_back(k);
    modes.push_back(k.negated());
  }

  SpectralField b(u.truncation_ptr());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& k = tr.rep(i);
    Vec3c acc{};
    for (const auto& h : modes) {
      const int qx = k.kx - h.kx;
      const int qy = k.ky - h.ky;
      const int qz = k.kz - h.kz;
      const auto it = table.find(pack_key(qx, qy, qz));
      if (it == table.end()) continue;
      const Vec3c& uh = table[pack_key(h.kx, h.ky, h.kz)];
      const Vec3c& uq = it->second;
      // i (u(h) . (k-h)) u(k-h)
      const Complex dot = uh[0] * static_cast<double>(qx) +
                          uh[1] * static_cast<double>(qy) +
                          uh[2] * static_cast<double>(qz);
      const Complex idot{-dot.imag(), dot.real()};
      for (int c = 0; c < 3; ++c) acc[c] += idot * uq[c];
    }
    b.coeff(i) = leray_project(acc, k);
  }
  return b;
}

double scalar_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol) {
  if (!(lo < hi)) throw std::domain_error("scalar_root needs lo < hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::domain_error("scalar_root: no sign change on the bracket");
  for (int i = 0; i < 200 && (hi - lo) > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace sns3d
