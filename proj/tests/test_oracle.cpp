#include <doctest.h>

#include <cmath>

#include "sns3d/oracle.hpp"
#include "test_util.hpp"

using namespace sns3d;
using namespace testutil;
using doctest::Approx;

TEST_CASE("exact linear stationary moments") {
  SUBCASE("single forced unit shell: 12 polarized modes") {
    auto tr = Truncation::make(1);
    const OuSpec ou = OuSpec::make(0.5, ForcingSpec::power_law(tr, 2.0, 1.0));
    // 12 * sigma^2 / (2 nu |k|^2) = 12 / (2 * 0.5) = 12
    CHECK(ou_exact_second_moment(ou, 0.0) == Approx(12.0).epsilon(1e-14));
    CHECK(ou_exact_second_moment(ou, 1.0) ==
          Approx(ou_exact_second_moment(ou, 0.0)).epsilon(1e-14));
  }

  SUBCASE("zero covariance gives zero") {
    auto tr = Truncation::make(3);
    const OuSpec ou = OuSpec::make(0.5, ForcingSpec::power_law(tr, 2.0, 0.0));
    CHECK(ou_exact_second_moment(ou, 2.0) == 0.0);
  }

  SUBCASE("term-by-term against an independent sum") {
    auto tr = Truncation::make(3);
    const auto forcing = ForcingSpec::power_law(tr, 1.5, 0.7);
    const double nu = 0.3;
    const OuSpec ou = OuSpec::make(nu, forcing);
    for (double m : {0.0, 1.0, 2.0}) {
      double expect = 0.0;
      for (const auto& k : tr->representatives()) {
        const double n2 = k.norm2();
        const double sigma = 0.7 * std::pow(std::sqrt(n2), -1.5);
        expect += 4.0 * std::pow(n2, m) * sigma * sigma / (2.0 * nu * n2);
      }
      CHECK(ou_exact_second_moment(ou, m) == Approx(expect).epsilon(1e-13));
    }
  }

  SUBCASE("deterministic forcing is refused") {
    auto tr = Truncation::make(2);
    auto forcing = ForcingSpec::power_law(tr, 2.0, 1.0);
    RngStream rng(5);
    forcing.set_deterministic_forcing(random_solenoidal(tr, rng));
    CHECK_THROWS_AS(OuSpec::make(0.5, std::move(forcing)), std::invalid_argument);
  }
}

TEST_CASE("stationary sampler") {
  auto tr = Truncation::make(2);
  const OuSpec ou = OuSpec::make(0.5, ForcingSpec::power_law(tr, 2.5, 1.0));

  SUBCASE("empirical second moment matches the closed form") {
    RngStream rng(11);
    const int draws = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double n = sobolev_norm(ou_sample_stationary(ou, rng), 0.0);
      sum += n * n;
      sum2 += n * n * n * n;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    CHECK(std::abs(mean - ou_exact_second_moment(ou, 0.0)) <= 3.0 * se);
  }

  SUBCASE("zero covariance draws the zero field") {
    const OuSpec quiet = OuSpec::make(0.5, ForcingSpec::power_law(tr, 2.0, 0.0));
    RngStream rng(13);
    CHECK(ou_sample_stationary(quiet, rng).is_zero());
  }

  SUBCASE("incompressible by construction") {
    RngStream rng(17);
    CHECK(ou_sample_stationary(ou, rng).max_divergence() < 1e-14);
  }
}

TEST_CASE("direct convolution") {
  SUBCASE("single mode vanishes") {
    auto tr = Truncation::make(3);
    const SpectralField u =
        single_mode_field(tr, Wavevector{2, 1, 0}, Complex{0.5, 0.0});
    const SpectralField b = nonlinear_term_direct(u);
    double worst = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      worst = std::max(worst, std::sqrt(mag2(b.coeff(i))));
    CHECK(worst < 1e-15);
  }

  SUBCASE("energy orthogonality holds analytically") {
    auto tr = Truncation::make(5);
    RngStream rng(19);
    const SpectralField u = random_solenoidal(tr, rng);
    const SpectralField b = nonlinear_term_direct(u);
    const double u0 = sobolev_norm(u, 0.0);
    const double u1 = sobolev_norm(u, 1.0);
    CHECK(std::abs(sobolev_inner(b, u, 0.0)) <= 1e-12 * std::max(1.0, u0 * u1 * u1));
  }

  SUBCASE("size guard refuses large truncations") {
    auto tr = Truncation::make(12);
    CHECK_THROWS_AS(nonlinear_term_direct(SpectralField(tr)), std::domain_error);
    // and passes with an explicit budget
    CHECK_NOTHROW(nonlinear_term_direct(SpectralField(tr), 1 << 20));
  }
}

TEST_CASE("bisection root finder") {
  SUBCASE("linear crossing") {
    const double r = scalar_root([](double s) { return s - 0.5; }, 0.0, 1.0);
    CHECK(r == Approx(0.5).epsilon(1e-11));
  }

  SUBCASE("exponential crossing at log 2") {
    const double r = scalar_root([](double s) { return std::exp(s) - 2.0; }, 0.0, 2.0);
    CHECK(r == Approx(std::log(2.0)).epsilon(1e-11));
  }

  SUBCASE("no sign change is a domain error") {
    CHECK_THROWS_AS(scalar_root([](double s) { return 1.0 + s * s; }, 0.0, 1.0),
                    std::domain_error);
  }
}
