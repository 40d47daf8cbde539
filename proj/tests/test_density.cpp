#include <doctest.h>

#include <cmath>
#include <vector>

#include "dtoda/density.hpp"
#include "dtoda/error.hpp"

using namespace dtoda;

namespace {

std::vector<BackgroundDensity> families() {
  std::vector<double> tab;
  const double r0 = 0.5, r1 = 6.0;
  for (int i = 0; i < 81; ++i) {
    const double x = r0 * std::pow(r1 / r0, i / 80.0);
    tab.push_back(0.7 * x + 0.1 * x * x);
  }
  return {BackgroundDensity::homogeneous(1.3, 0.7, 0.3, 9.0), BackgroundDensity::homogeneous(1.0, -1.0, 0.5, 9.0),
          BackgroundDensity::cylinder(2.0, 0.5, 20.0), BackgroundDensity::general(0.7, 0.5, 4, 1.2, 30.0),
          BackgroundDensity::general(1.0, 0.8, 3, 0.5, 30.0), BackgroundDensity::tabulated(tab, r0, r1)};
}

}  // namespace

TEST_CASE("closed-form potentials") {
  CHECK(BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 10.0).potential(2.0) == doctest::Approx(2.0));
  CHECK(BackgroundDensity::cylinder(1.0, 1.0, 100.0).potential(1.0) == 0.0);
  CHECK(BackgroundDensity::general(1.0, 0.0, 4, 1.5, 100.0).potential(std::exp(1.0)) == doctest::Approx(1.0));
}

TEST_CASE("closed-form densities") {
  CHECK(BackgroundDensity::cylinder(2.0, 1.0, 100.0).sigma(4.0) == doctest::Approx(0.5));
  const auto h = BackgroundDensity::homogeneous(3.0, 1.0, 0.0, 10.0);
  for (double x : {0.1, 1.0, 7.0}) CHECK(h.sigma(x) == doctest::Approx(3.0));
  CHECK(BackgroundDensity::general(1.0, 0.0, 3, 1.5, 100.0).sigma(std::exp(1.0)) ==
        doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("u0 constant") {
  CHECK(BackgroundDensity::cylinder(1.7, 0.4, 10.0).u0() == 0.0);
  CHECK(BackgroundDensity::homogeneous(2.0, 0.5, 0.0, 10.0).u0() == 0.0);
  const auto h = BackgroundDensity::homogeneous(1.0, 1.0, 0.25, 10.0);
  CHECK(h.u0() == doctest::Approx(0.25 * std::log(0.25) - 0.25).epsilon(1e-15));
  // Cross-check against the circle integral of log|z|^2 z dU - U over |z| = r0.
  const int M = 64;
  double acc = 0.0;
  for (int k = 0; k < M; ++k) acc += std::log(0.25) * h.flux(0.25) - h.potential(0.25);
  CHECK(acc / M == doctest::Approx(h.u0()).epsilon(1e-14));
}

TEST_CASE("sigma equals (x U')' on a grid") {
  for (const auto& d : families()) {
    const double r0 = std::max(d.r0_sq(), 1e-3), r1 = d.r1_sq();
    for (int i = 1; i < 99; ++i) {
      const double x = r0 * std::pow(r1 / r0, i / 99.0);
      const double h = 1e-5 * x;
      const double U2 = (d.potential(x + h) - 2 * d.potential(x) + d.potential(x - h)) / (h * h);
      const double U1 = (d.potential(x + h) - d.potential(x - h)) / (2 * h);
      const double s = x * U2 + U1;
      CHECK(std::abs(s - d.sigma(x)) <= 1e-6 * std::max(1.0, std::abs(d.sigma(x))) * 10);
    }
  }
}

TEST_CASE("general family first integral and k -> 2 limit") {
  const auto g = BackgroundDensity::general(0.8, 0.3, 5, 1.0, 40.0);
  const double nu = 4.0 / 3.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = std::pow(40.0, i / 100.0);
    CHECK(std::abs(0.8 * nu * std::pow(g.potential(x), 1.0 / 4.0) - x * g.slope(x)) <= 1e-10);
  }
  const double alpha = 0.6, eps = 1e-3;
  const auto lim = BackgroundDensity::general(alpha * eps, 1.0, 2.0 + eps, 0.5, 4.0);
  for (int i = 0; i <= 20; ++i) {
    const double x = 0.5 * std::pow(8.0, i / 20.0);
    CHECK(std::abs(lim.potential(x) - std::pow(x, alpha)) <= 5.0 * eps * std::pow(x, alpha));
  }
}

TEST_CASE("domain errors") {
  const auto c = BackgroundDensity::cylinder(1.0, 1.0, 4.0);
  CHECK_THROWS_AS(c.potential(0.5), Error);
  try {
    c.sigma(5.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfAnnulus);
  }
  CHECK_THROWS_AS(BackgroundDensity::homogeneous(1.0, -1.0, 0.0, 4.0), Error);
  CHECK_THROWS_AS(BackgroundDensity::general(1.0, 0.0, 4, 0.5, 4.0), Error);
  try {
    BackgroundDensity::tabulated({1.0, 0.5, 0.1, -0.3, -0.2, 0.0}, 1.0, 2.0);
    FAIL("expected NonPositiveDensity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveDensity);
  }
}

TEST_CASE("energy primitive differentiates to U sigma") {
  for (const auto& d : families()) {
    const double r0 = std::max(d.r0_sq(), 1e-3), r1 = d.r1_sq();
    CHECK(std::abs(d.energy_primitive(d.r0_sq())) <= 1e-12);
    for (int i = 1; i < 10; ++i) {
      const double x = r0 * std::pow(r1 / r0, i / 10.0);
      const double h = 1e-5 * x;
      const double num = (d.energy_primitive(x + h) - d.energy_primitive(x - h)) / (2 * h);
      CHECK(num == doctest::Approx(d.potential(x) * d.sigma(x)).epsilon(1e-6));
    }
  }
}

TEST_CASE("t0 bisection inverts the flux") {
  for (const auto& d : families()) {
    const double t0 = 0.5 * (d.t0_min() + d.t0_max());
    const double x = d.radius_sq_for_t0(t0);
    CHECK(d.flux(x) == doctest::Approx(t0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(BackgroundDensity::cylinder(1.0, 1.0, 4.0).radius_sq_for_t0(5.0), Error);
}

TEST_CASE("parameter derivatives match finite differences") {
  struct Case {
    BackgroundDensity d;
    Parameter p;
  };
  const std::vector<Case> cases = {{BackgroundDensity::homogeneous(1.3, 0.7, 0.3, 9.0), Parameter::C},
                                   {BackgroundDensity::homogeneous(1.3, 0.7, 0.3, 9.0), Parameter::Alpha},
                                   {BackgroundDensity::cylinder(2.0, 0.5, 20.0), Parameter::R},
                                   {BackgroundDensity::cylinder(2.0, 0.5, 20.0), Parameter::Beta},
                                   {BackgroundDensity::cylinder(2.0, 0.5, 20.0), Parameter::LogR0Sq},
                                   {BackgroundDensity::general(0.7, 0.5, 4, 1.2, 30.0), Parameter::C1},
                                   {BackgroundDensity::general(0.7, 0.5, 4, 1.2, 30.0), Parameter::C0}};
  for (const auto& c : cases) {
    const double lam = c.d.parameter(c.p), h = 1e-5 * std::max(1.0, std::abs(lam));
    const auto up = c.d.with_parameter(c.p, lam + h), dn = c.d.with_parameter(c.p, lam - h);
    for (double x : {1.5, 3.0, 8.0}) {
      CHECK((up.potential(x) - dn.potential(x)) / (2 * h) == doctest::Approx(c.d.potential_derivative(c.p, x)).epsilon(1e-7));
      CHECK((up.slope(x) - dn.slope(x)) / (2 * h) == doctest::Approx(c.d.slope_derivative(c.p, x)).epsilon(1e-7));
    }
  }
}
