#pragma once

// Generator (Kolmogorov operator) of the Galerkin diffusion applied to
// C^2 test functionals, and the empirical stationarity identity
// integral of L f against the invariant law being zero.

#include <memory>

#include "sns3d/dynamics.hpp"
#include "sns3d/measure.hpp"
#include "sns3d/spectral.hpp"

namespace sns3d {

// C^2 functional on the truncated space. hessian_trace is the
// Hilbert-Schmidt sum tr(phi phi* D^2 f) over the forced solenoidal basis;
// the default implementation constructs the basis vectors explicitly and
// sums hessian_quadform over them, overrides may use closed forms.
class TestFunctional {
 public:
  virtual ~TestFunctional() = default;
  virtual double value(const SpectralField& x) const = 0;
  virtual SpectralField gradient(const SpectralField& x) const = 0;
  virtual double hessian_quadform(const SpectralField& x,
                                  const SpectralField& h) const = 0;
  virtual double hessian_trace(const SpectralField& x,
                               const ForcingSpec& spec) const;
};

// f(x) = (1 + ||x||_p^2)^{-eps_p}, eps_p = 1/(2p-1); the bounded functional
// whose generator residual extracts the fractional regularity moments.
class LyapunovFunctional : public TestFunctional {
 public:
  explicit LyapunovFunctional(int p);
  int p() const { return p_; }
  double eps() const { return eps_; }

  double value(const SpectralField& x) const override;
  // -2 eps (1 + ||x||_p^2)^{-eps-1} A^p x
  SpectralField gradient(const SpectralField& x) const override;
  // -2 eps (1+||x||_p^2)^{-eps-1} ||h||_p^2
  //   + 4 eps (eps+1) (1+||x||_p^2)^{-eps-2} <A^p x, h>^2
  double hessian_quadform(const SpectralField& x,
                          const SpectralField& h) const override;
  double hessian_trace(const SpectralField& x,
                       const ForcingSpec& spec) const override;

 private:
  int p_;
  double eps_;
};

// f(x) = ||x||_0^2; its generator is noise_energy_rate - 2 nu ||x||_1^2,
// the sharp check against the exact linear stationary law.
class QuadraticEnergyFunctional : public TestFunctional {
 public:
  double value(const SpectralField& x) const override;
  SpectralField gradient(const SpectralField& x) const override;
  double hessian_quadform(const SpectralField& x,
                          const SpectralField& h) const override;
  double hessian_trace(const SpectralField& x,
                       const ForcingSpec& spec) const override;
};

// c1 f1 + c2 f2, for linearity checks through the shared code path.
class LinearComboFunctional : public TestFunctional {
 public:
  LinearComboFunctional(double c1, std::shared_ptr<const TestFunctional> f1,
                        double c2, std::shared_ptr<const TestFunctional> f2);
  double value(const SpectralField& x) const override;
  SpectralField gradient(const SpectralField& x) const override;
  double hessian_quadform(const SpectralField& x,
                          const SpectralField& h) const override;
  double hessian_trace(const SpectralField& x,
                       const ForcingSpec& spec) const override;

 private:
  double c1_, c2_;
  std::shared_ptr<const TestFunctional> f1_, f2_;
};

// L f(x) = 1/2 tr(phi phi* D^2 f)(x) + <-nu A x - B(x) + g, Df(x)>_0.
// With nonlinear = false this is the generator of the linear Stokes system
// (B dropped), matching simulations run with the nonlinearity disabled.
double apply_generator(const SpectralField& x, const TestFunctional& f,
                       const ForcingSpec& spec, double nu, bool nonlinear = true);

// Accumulates apply_generator along stationary samples; the batch-means
// mean/stderr pair is the empirical stationarity residual.
class GeneratorResidual {
 public:
  GeneratorResidual(std::shared_ptr<const TestFunctional> f, ForcingSpec spec,
                    double nu, std::string id, bool nonlinear = true);
  void add(const SpectralField& x);
  void add_value(double generator_value);  // precomputed apply_generator
  void merge(const GeneratorResidual& other);

  double mean() const { return acc_.mean(); }
  double stderr_batch() const { return acc_.stderr_batch(); }
  std::uint64_t count() const { return acc_.count(); }
  const MomentAccumulator& accumulator() const { return acc_; }

 private:
  std::shared_ptr<const TestFunctional> f_;
  ForcingSpec spec_;
  double nu_;
  bool nonlinear_;
  MomentAccumulator acc_;
};

}  // namespace sns3d
