#pragma once

// Fourier-space representation of periodic, mean-zero, divergence-free
// velocity fields on the box (0,2pi)^3, plus the norms and projections
// built on it. Coefficients follow the plain exponential convention
//   u(xi) = sum_k coeff(k) e^{i k.xi},
// so |u|_{L^2-mean}^2 = sum_k |coeff(k)|^2 and the grid average of |u|^2
// equals the coefficient sum (Parseval). Storage keeps one representative
// per +-k pair; the conjugate partner is implied, and every norm/inner
// sum counts the full symmetric set.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sns3d/rng.hpp"

namespace sns3d {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Vec3c = std::array<Complex, 3>;

struct Wavevector {
  int kx = 0;
  int ky = 0;
  int kz = 0;

  int norm2() const { return kx * kx + ky * ky + kz * kz; }
  double norm() const;
  Wavevector negated() const { return {-kx, -ky, -kz}; }
  bool is_zero() const { return kx == 0 && ky == 0 && kz == 0; }
  // canonical member of the +-k pair: first nonzero component positive
  bool is_canonical() const;
  bool operator==(const Wavevector&) const = default;
};

// Galerkin cutoff |k|^2 <= k_max^2 (Euclidean ball, whole shells included).
// Immutable and shared between fields; also caches the two unit
// polarization vectors orthogonal to each representative mode.
class Truncation {
 public:
  static std::shared_ptr<const Truncation> make(int k_max);

  int k_max() const { return k_max_; }
  std::size_t representative_count() const { return reps_.size(); }
  // size of the full symmetric mode set (reported eigenmode count of A)
  std::size_t mode_count() const { return 2 * reps_.size(); }
  const std::vector<Wavevector>& representatives() const { return reps_; }
  const Wavevector& rep(std::size_t i) const { return reps_[i]; }
  int rep_norm2(std::size_t i) const { return norm2_[i]; }
  const Vec3& pol1(std::size_t i) const { return pol1_[i]; }
  const Vec3& pol2(std::size_t i) const { return pol2_[i]; }

  // Locates k in the mode set: (representative index, conjugate flag),
  // nullopt when k is outside the ball or zero.
  std::optional<std::pair<std::size_t, bool>> find(const Wavevector& k) const;
  bool contains(const Wavevector& k) const { return find(k).has_value(); }

 private:
  explicit Truncation(int k_max);
  int k_max_;
  std::vector<Wavevector> reps_;
  std::vector<int> norm2_;
  std::vector<Vec3> pol1_, pol2_;
  std::vector<std::int64_t> packed_;  // sorted packed keys parallel to reps_
};

// Two unit vectors orthogonal to k: Gram-Schmidt of the axis with the
// smallest |k component| (ties broken by axis index), then the cross
// product completing the right-handed frame.
std::pair<Vec3, Vec3> polarization_basis(const Wavevector& k);

class SpectralField {
 public:
  SpectralField() = default;  // empty placeholder, no truncation attached
  explicit SpectralField(std::shared_ptr<const Truncation> trunc);

  const Truncation& truncation() const { return *trunc_; }
  const std::shared_ptr<const Truncation>& truncation_ptr() const { return trunc_; }
  std::size_t size() const { return coeff_.size(); }

  Vec3c& coeff(std::size_t i) { return coeff_[i]; }
  const Vec3c& coeff(std::size_t i) const { return coeff_[i]; }
  const std::vector<Vec3c>& coeffs() const { return coeff_; }

  // Access by wavevector with the implied conjugate resolved.
  // Throws std::domain_error for modes outside the truncation.
  Vec3c coeff_at(const Wavevector& k) const;
  void set_coeff(const Wavevector& k, const Vec3c& value);

  bool same_truncation(const SpectralField& other) const {
    return trunc_->k_max() == other.trunc_->k_max();
  }

  void set_zero();
  bool is_zero() const;
  bool all_finite() const;
  // max_k |k . coeff(k)| over representatives
  double max_divergence() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator*=(double s);

  bool operator==(const SpectralField& other) const;

 private:
  std::shared_ptr<const Truncation> trunc_;
  std::vector<Vec3c> coeff_;
};

// pi_k c = c - (k.c) k / |k|^2. Throws std::domain_error for k = 0.
Vec3c leray_project(const Vec3c& c, const Wavevector& k);

// ||x||_m = sqrt( sum_k |k|^{2m} |coeff(k)|^2 ) over the full symmetric set.
double sobolev_norm(const SpectralField& x, double m);
// sum_k |k|^{2m} Re(x(k) . conj(y(k))); throws on truncation mismatch.
double sobolev_inner(const SpectralField& x, const SpectralField& y, double m);

struct GevreyParams {
  double alpha = 0.0;  // analyticity-radius parameter, >= 0 (0 = H^1 limit)
  double beta = 1.0;   // exponent in (0,1]
  GevreyParams(double alpha_, double beta_);
};

inline constexpr double kGevreyExpCap = 700.0;  // natural-log scale

struct GevreyNormResult {
  double value = 0.0;      // may be +inf when the sum overflows a double
  double log_value = 0.0;  // log of the norm, always finite for nonzero fields
  bool log_domain = false; // true when any exponent 2 a |k|^b exceeded the cap
};

// ||x||_{G(a,b)} = sqrt( sum_k |k|^2 e^{2 a |k|^b} |coeff(k)|^2 )
GevreyNormResult gevrey_norm_detail(const SpectralField& x, const GevreyParams& g,
                                    double exp_cap = kGevreyExpCap);
double gevrey_norm(const SpectralField& x, const GevreyParams& g);
// sum_k |k|^2 e^{2 a |k|^b} Re(x(k) . conj(y(k)))
double gevrey_inner(const SpectralField& x, const SpectralField& y,
                    const GevreyParams& g);

// A^s: coeff(k) scaled by |k|^{2s}
SpectralField apply_A_power(const SpectralField& x, double s);

// Collocation samples of the velocity field, component-major layout:
// data[c*n^3 + (i1*n + i2)*n + i3], xi_j = 2 pi j / n.
struct PhysicalField {
  int n = 0;
  std::vector<double> data;

  double at(int c, int i1, int i2, int i3) const {
    return data[((static_cast<std::size_t>(c) * n + i1) * n + i2) * n + i3];
  }
};

// smallest grid representing the truncation exactly (2 k_max + 1)
int min_grid_size(int k_max);
// smallest 7-smooth grid making quadratic products alias-free (>= 3 k_max + 1)
int dealias_grid_size(int k_max);

// Throws std::domain_error when n < min_grid_size(k_max).
PhysicalField transform_to_physical(const SpectralField& x, int n);
SpectralField transform_to_spectral(const PhysicalField& u,
                                    std::shared_ptr<const Truncation> trunc);

// Normalized coefficients of a scalar sample array (size n^3) at the
// truncation's representatives; the workhorse of the product pipeline.
std::vector<Complex> scalar_to_spectral(const std::vector<double>& samples,
                                        int n, const Truncation& trunc);

// Gaussian field with E|coeff(k)|^2 = rule(k), drawn in the polarization
// basis so the output is solenoidal by construction.
using SpectrumRule = std::function<double(const Wavevector&)>;
SpectralField random_field(const SpectrumRule& rule,
                           std::shared_ptr<const Truncation> trunc,
                           RngStream& rng);

}  // namespace sns3d
