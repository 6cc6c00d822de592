#include "sns3d/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace sns3d {

namespace {

std::int64_t pack(const Wavevector& k) {
  // component range is well inside +-2^20
  return (static_cast<std::int64_t>(k.kx + (1 << 20)) << 42) |
         (static_cast<std::int64_t>(k.ky + (1 << 20)) << 21) |
         static_cast<std::int64_t>(k.kz + (1 << 20));
}

double mag2(const Vec3c& c) {
  return std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
}

Vec3c conj3(const Vec3c& c) {
  return {std::conj(c[0]), std::conj(c[1]), std::conj(c[2])};
}

}  // namespace

double Wavevector::norm() const { return std::sqrt(static_cast<double>(norm2())); }

bool Wavevector::is_canonical() const {
  if (kx != 0) return kx > 0;
  if (ky != 0) return ky > 0;
  return kz > 0;
}

std::pair<Vec3, Vec3> polarization_basis(const Wavevector& k) {
  if (k.is_zero()) throw std::domain_error("polarization basis needs k != 0");
  const double kn = k.norm();
  const Vec3 khat{k.kx / kn, k.ky / kn, k.kz / kn};
  const int ak[3] = {std::abs(k.kx), std::abs(k.ky), std::abs(k.kz)};
  int axis = 0;
  if (ak[1] < ak[axis]) axis = 1;
  if (ak[2] < ak[axis]) axis = 2;
  Vec3 a{0.0, 0.0, 0.0};
  a[axis] = 1.0;
  const double proj = a[0] * khat[0] + a[1] * khat[1] + a[2] * khat[2];
  Vec3 e1{a[0] - proj * khat[0], a[1] - proj * khat[1], a[2] - proj * khat[2]};
  const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  e1 = {e1[0] / n1, e1[1] / n1, e1[2] / n1};
  Vec3 e2{khat[1] * e1[2] - khat[2] * e1[1],
          khat[2] * e1[0] - khat[0] * e1[2],
          khat[0] * e1[1] - khat[1] * e1[0]};
  const double n2 = std::sqrt(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]);
  e2 = {e2[0] / n2, e2[1] / n2, e2[2] / n2};
  return {e1, e2};
}

Truncation::Truncation(int k_max) : k_max_(k_max) {
  const int k2max = k_max * k_max;
  for (int kx = -k_max; kx <= k_max; ++kx)
    for (int ky = -k_max; ky <= k_max; ++ky)
      for (int kz = -k_max; kz <= k_max; ++kz) {
        const Wavevector k{kx, ky, kz};
        if (k.is_zero() || k.norm2() > k2max) continue;
        if (!k.is_canonical()) continue;
        reps_.push_back(k);
      }
  std::sort(reps_.begin(), reps_.end(), [](const Wavevector& a, const Wavevector& b) {
    if (a.kx != b.kx) return a.kx < b.kx;
    if (a.ky != b.ky) return a.ky < b.ky;
    return a.kz < b.kz;
  });
  norm2_.reserve(reps_.size());
  pol1_.reserve(reps_.size());
  pol2_.reserve(reps_.size());
  packed_.reserve(reps_.size());
  for (const auto& k : reps_) {
    norm2_.push_back(k.norm2());
    auto [e1, e2] = polarization_basis(k);
    pol1_.push_back(e1);
    pol2_.push_back(e2);
    packed_.push_back(pack(k));
  }
}

std::shared_ptr<const Truncation> Truncation::make(int k_max) {
  if (k_max < 1) throw std::invalid_argument("truncation needs k_max >= 1");
  return std::shared_ptr<const Truncation>(new Truncation(k_max));
}

std::optional<std::pair<std::size_t, bool>> Truncation::find(const Wavevector& k) const {
  if (k.is_zero() || k.norm2() > k_max_ * k_max_) return std::nullopt;
  const Wavevector canon = k.is_canonical() ? k : k.negated();
  const auto key = pack(canon);
  const auto it = std::lower_bound(packed_.begin(), packed_.end(), key);
  if (it == packed_.end() || *it != key) return std::nullopt;
  const std::size_t idx = static_cast<std::size_t>(it - packed_.begin());
  return std::make_pair(idx, !k.is_canonical());
}

SpectralField::SpectralField(std::shared_ptr<const Truncation> trunc)
    : trunc_(std::move(trunc)), coeff_(trunc_->representative_count(), Vec3c{}) {}

Vec3c SpectralField::coeff_at(const Wavevector& k) const {
  const auto loc = trunc_->find(k);
  if (!loc) throw std::domain_error("wavevector outside truncation");
  return loc->second ? conj3(coeff_[loc->first]) : coeff_[loc->first];
}

void SpectralField::set_coeff(const Wavevector& k, const Vec3c& value) {
  const auto loc = trunc_->find(k);
  if (!loc) throw std::domain_error("wavevector outside truncation");
  coeff_[loc->first] = loc->second ? conj3(value) : value;
}

void SpectralField::set_zero() {
  std::fill(coeff_.begin(), coeff_.end(), Vec3c{});
}

bool SpectralField::is_zero() const {
  for (const auto& c : coeff_)
    if (mag2(c) != 0.0) return false;
  return true;
}

bool SpectralField::all_finite() const {
  for (const auto& c : coeff_)
    for (const auto& z : c)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

double SpectralField::max_divergence() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    const auto& k = trunc_->rep(i);
    const Complex div = static_cast<double>(k.kx) * coeff_[i][0] +
                        static_cast<double>(k.ky) * coeff_[i][1] +
                        static_cast<double>(k.kz) * coeff_[i][2];
    worst = std::max(worst, std::abs(div));
  }
  return worst;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (!same_truncation(other)) throw std::domain_error("truncation mismatch");
  for (std::size_t i = 0; i < coeff_.size(); ++i)
    for (int c = 0; c < 3; ++c) coeff_[i][c] += other.coeff_[i][c];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeff_)
    for (auto& z : c) z *= s;
  return *this;
}

bool SpectralField::operator==(const SpectralField& other) const {
  return trunc_->k_max() == other.trunc_->k_max() && coeff_ == other.coeff_;
}

Vec3c leray_project(const Vec3c& c, const Wavevector& k) {
  if (k.is_zero()) throw std::domain_error("Leray projection needs k != 0");
  const double n2 = static_cast<double>(k.norm2());
  const Complex kc = static_cast<double>(k.kx) * c[0] +
                     static_cast<double>(k.ky) * c[1] +
                     static_cast<double>(k.kz) * c[2];
  const Complex s = kc / n2;
  return {c[0] - s * static_cast<double>(k.kx),
          c[1] - s * static_cast<double>(k.ky),
          c[2] - s * static_cast<double>(k.kz)};
}

double sobolev_norm(const SpectralField& x, double m) {
  const auto& tr = x.truncation();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = std::pow(static_cast<double>(tr.rep_norm2(i)), m);
    sum += w * mag2(x.coeff(i));
  }
  return std::sqrt(2.0 * sum);  // conjugate partners double every term
}

double sobolev_inner(const SpectralField& x, const SpectralField& y, double m) {
  if (!x.same_truncation(y)) throw std::domain_error("truncation mismatch");
  const auto& tr = x.truncation();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& a = x.coeff(i);
    const auto& b = y.coeff(i);
    const double re = a[0].real() * b[0].real() + a[0].imag() * b[0].imag() +
                      a[1].real() * b[1].real() + a[1].imag() * b[1].imag() +
                      a[2].real() * b[2].real() + a[2].imag() * b[2].imag();
    sum += std::pow(static_cast<double>(tr.rep_norm2(i)), m) * re;
  }
  return 2.0 * sum;
}

GevreyParams::GevreyParams(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!(alpha >= 0.0)) throw std::domain_error("Gevrey alpha must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("Gevrey beta must be in (0,1]");
}

GevreyNormResult gevrey_norm_detail(const SpectralField& x, const GevreyParams& g,
                                    double exp_cap) {
  const auto& tr = x.truncation();
  // streaming log-sum-exp keeps the accumulation finite past the cap
  double max_log = -std::numeric_limits<double>::infinity();
  double scaled = 0.0;
  bool capped = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m2 = mag2(x.coeff(i));
    if (m2 == 0.0) continue;
    const double n2 = static_cast<double>(tr.rep_norm2(i));
    const double w = 2.0 * g.alpha * std::pow(n2, 0.5 * g.beta);
    if (w > exp_cap) capped = true;
    const double lt = w + std::log(2.0 * n2 * m2);
    if (lt <= max_log) {
      scaled += std::exp(lt - max_log);
    } else {
      scaled = scaled * std::exp(max_log - lt) + 1.0;
      max_log = lt;
    }
  }
  GevreyNormResult out;
  out.log_domain = capped;
  if (scaled == 0.0) {
    out.value = 0.0;
    out.log_value = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.log_value = 0.5 * (max_log + std::log(scaled));
  out.value = std::exp(out.log_value);
  return out;
}

double gevrey_norm(const SpectralField& x, const GevreyParams& g) {
  return gevrey_norm_detail(x, g).value;
}

double gevrey_inner(const SpectralField& x, const SpectralField& y,
                    const GevreyParams& g) {
  if (!x.same_truncation(y)) throw std::domain_error("truncation mismatch");
  const auto& tr = x.truncation();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& a = x.coeff(i);
    const auto& b = y.coeff(i);
    const double re = a[0].real() * b[0].real() + a[0].imag() * b[0].imag() +
                      a[1].real() * b[1].real() + a[1].imag() * b[1].imag() +
                      a[2].real() * b[2].real() + a[2].imag() * b[2].imag();
    if (re == 0.0) continue;
    const double n2 = static_cast<double>(tr.rep_norm2(i));
    sum += n2 * std::exp(2.0 * g.alpha * std::pow(n2, 0.5 * g.beta)) * re;
  }
  return 2.0 * sum;
}

SpectralField apply_A_power(const SpectralField& x, double s) {
  SpectralField out = x;
  if (s == 0.0) return out;
  const auto& tr = x.truncation();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = std::pow(static_cast<double>(tr.rep_norm2(i)), s);
    for (int c = 0; c < 3; ++c) out.coeff(i)[c] *= w;
  }
  return out;
}

int min_grid_size(int k_max) { return 2 * k_max + 1; }

namespace {

bool is_7smooth(int n) {
  for (int p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

int dealias_grid_size(int k_max) {
  int n = 3 * k_max + 1;  // product modes up to 2 k_max cannot alias into the ball
  while (!is_7smooth(n)) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// FFT backend. Plans are cached per grid size and shared; execution uses
// per-thread buffers (fftw_malloc alignment) so concurrent transforms on
// distinct inputs are safe and bitwise deterministic.

namespace {

struct PlanSet {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

std::mutex g_plan_mutex;
std::map<int, PlanSet>& plan_registry() {
  static std::map<int, PlanSet> reg;
  return reg;
}

PlanSet get_plans(int n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& reg = plan_registry();
  auto it = reg.find(n);
  if (it != reg.end()) return it->second;
  const std::size_t nr = static_cast<std::size_t>(n) * n * n;
  const std::size_t nc = static_cast<std::size_t>(n) * n * (n / 2 + 1);
  double* rbuf = fftw_alloc_real(nr);
  fftw_complex* cbuf = fftw_alloc_complex(nc);
  PlanSet ps;
  ps.r2c = fftw_plan_dft_r2c_3d(n, n, n, rbuf, cbuf, FFTW_ESTIMATE);
  ps.c2r = fftw_plan_dft_c2r_3d(n, n, n, cbuf, rbuf, FFTW_ESTIMATE);
  fftw_free(rbuf);
  fftw_free(cbuf);
  reg[n] = ps;
  return ps;
}

struct FftBuffers {
  int n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;

  void ensure(int n_) {
    if (n == n_) return;
    release();
    n = n_;
    real = fftw_alloc_real(static_cast<std::size_t>(n) * n * n);
    cplx = fftw_alloc_complex(static_cast<std::size_t>(n) * n * (n / 2 + 1));
  }
  void release() {
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
    real = nullptr;
    cplx = nullptr;
    n = 0;
  }
  ~FftBuffers() { release(); }
};

thread_local FftBuffers tl_buffers;

inline std::size_t half_index(int n, int i1, int i2, int k3) {
  return (static_cast<std::size_t>(i1) * n + i2) * (n / 2 + 1) + k3;
}

// scatter one coefficient into the half-spectrum grid (k3 >= 0 plane only)
void place_mode(fftw_complex* grid, int n, const Wavevector& k, const Complex& v) {
  if (k.kz < 0) return;
  const int i1 = (k.kx % n + n) % n;
  const int i2 = (k.ky % n + n) % n;
  const std::size_t idx = half_index(n, i1, i2, k.kz);
  grid[idx][0] = v.real();
  grid[idx][1] = v.imag();
}

Complex read_mode(const fftw_complex* grid, int n, const Wavevector& k) {
  if (k.kz >= 0) {
    const int i1 = (k.kx % n + n) % n;
    const int i2 = (k.ky % n + n) % n;
    const std::size_t idx = half_index(n, i1, i2, k.kz);
    return {grid[idx][0], grid[idx][1]};
  }
  const Wavevector m = k.negated();
  const int i1 = (m.kx % n + n) % n;
  const int i2 = (m.ky % n + n) % n;
  const std::size_t idx = half_index(n, i1, i2, m.kz);
  return {grid[idx][0], -grid[idx][1]};
}

}  // namespace

PhysicalField transform_to_physical(const SpectralField& x, int n) {
  const auto& tr = x.truncation();
  if (n < min_grid_size(tr.k_max()))
    throw std::domain_error("grid too small for truncation");
  const PlanSet plans = get_plans(n);
  const std::size_t nr = static_cast<std::size_t>(n) * n * n;
  const std::size_t nc = static_cast<std::size_t>(n) * n * (n / 2 + 1);

  PhysicalField out;
  out.n = n;
  out.data.assign(3 * nr, 0.0);

  tl_buffers.ensure(n);
  for (int c = 0; c < 3; ++c) {
    std::fill_n(reinterpret_cast<double*>(tl_buffers.cplx), 2 * nc, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto& k = tr.rep(i);
      place_mode(tl_buffers.cplx, n, k, x.coeff(i)[c]);
      place_mode(tl_buffers.cplx, n, k.negated(), std::conj(x.coeff(i)[c]));
    }
    fftw_execute_dft_c2r(plans.c2r, tl_buffers.cplx, tl_buffers.real);
    std::copy_n(tl_buffers.real, nr, out.data.begin() + c * nr);
  }
  return out;
}

SpectralField transform_to_spectral(const PhysicalField& u,
                                    std::shared_ptr<const Truncation> trunc) {
  const int n = u.n;
  if (n < min_grid_size(trunc->k_max()))
    throw std::domain_error("grid too small for truncation");
  const PlanSet plans = get_plans(n);
  const std::size_t nr = static_cast<std::size_t>(n) * n * n;
  const double inv = 1.0 / static_cast<double>(nr);

  SpectralField out(trunc);
  tl_buffers.ensure(n);
  for (int c = 0; c < 3; ++c) {
    std::copy_n(u.data.begin() + c * nr, nr, tl_buffers.real);
    fftw_execute_dft_r2c(plans.r2c, tl_buffers.real, tl_buffers.cplx);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.coeff(i)[c] = inv * read_mode(tl_buffers.cplx, n, trunc->rep(i));
    }
  }
  return out;
}

std::vector<Complex> scalar_to_spectral(const std::vector<double>& samples,
                                        int n, const Truncation& trunc) {
  const std::size_t nr = static_cast<std::size_t>(n) * n * n;
  if (samples.size() != nr)
    throw std::domain_error("sample array does not match the grid size");
  if (n < min_grid_size(trunc.k_max()))
    throw std::domain_error("grid too small for truncation");
  const PlanSet plans = get_plans(n);
  const double inv = 1.0 / static_cast<double>(nr);

  tl_buffers.ensure(n);
  std::copy_n(samples.begin(), nr, tl_buffers.real);
  fftw_execute_dft_r2c(plans.r2c, tl_buffers.real, tl_buffers.cplx);
  std::vector<Complex> out(trunc.representative_count());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = inv * read_mode(tl_buffers.cplx, n, trunc.rep(i));
  return out;
}

SpectralField random_field(const SpectrumRule& rule,
                           std::shared_ptr<const Truncation> trunc,
                           RngStream& rng) {
  SpectralField out(trunc);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double target = rule(trunc->rep(i));
    const double s = target > 0.0 ? std::sqrt(0.5 * target) : 0.0;
    const Complex z1 = s * rng.complex_gaussian();
    const Complex z2 = s * rng.complex_gaussian();
    const Vec3& e1 = trunc->pol1(i);
    const Vec3& e2 = trunc->pol2(i);
    for (int c = 0; c < 3; ++c) out.coeff(i)[c] = z1 * e1[c] + z2 * e2[c];
  }
  return out;
}

}  // namespace sns3d
