#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dtoda/derivative.hpp"
#include "dtoda/error.hpp"
#include "dtoda/moments.hpp"
#include "dtoda/tau.hpp"

using namespace dtoda;

namespace {
const auto sigma1 = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 100.0);
const auto cyl = BackgroundDensity::cylinder(1.0, 1.0, 100.0);

MomentVector line(double t0) { return MomentVector{t0, {}}; }

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }
}  // namespace

TEST_CASE("closed forms on the t0-line") {
  CHECK(tau_t0_closed(sigma1, 1.0).value == doctest::Approx(-0.75).epsilon(1e-14));
  const double e = std::numbers::e;
  CHECK(tau_t0_closed(sigma1, e).value == doctest::Approx(-e * e / 4).epsilon(1e-14));
  CHECK(tau_t0_closed(cyl, 1.0).value == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(tau_t0_closed(cyl, 2.0).value == doctest::Approx(4.0 / 3).epsilon(1e-14));
  // k = 3 with C0 = 0 is the cylinder with R = 2 C1^2 and r0 = 1
  const auto g3 = BackgroundDensity::general(0.5, 0.0, 3, 1.0, 50.0);
  const auto c3 = BackgroundDensity::cylinder(0.5, 1.0, 50.0);
  for (double t0 : {0.5, 1.0, 1.8}) CHECK(rel(tau_t0_closed(g3, t0).value, tau_t0_closed(c3, t0).value) < 1e-12);
  CHECK_THROWS_AS(tau_t0_closed(cyl, -1.0), Error);
}

TEST_CASE("three methods agree on the t0-line") {
  const BackgroundDensity fams[] = {sigma1, BackgroundDensity::cylinder(1.3, 0.6, 60.0),
                                    BackgroundDensity::general(0.7, 0.8, 4, 0.5, 60.0)};
  for (const auto& d : fams)
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double t0 = d.t0_min() + f * (std::min(d.t0_max(), 4.0) - d.t0_min());
      CAPTURE(to_string(d.family()));
      CAPTURE(t0);
      const T0LineValues c = t0_line_closed(d, t0);
      const ExteriorMap m = ExteriorMap::circle(std::exp(0.5 * c.log_r_sq), 0);
      const MomentVector mv = line(t0);
      const DualMoments dm = dual_moments(m, d, 1);
      CHECK(rel(dm.v0, c.v0) < 1e-9);
      CHECK(rel(tau_via_moments(mv, dm, d, m).value, c.F) < 1e-6);
      CHECK(rel(tau_double_integral(m, d).value, c.F) < 1e-6);
    }
}

TEST_CASE("ellipse: double integral against the moment identity") {
  const ExteriorMap m(1.0, {0.0, 0.1});
  for (const auto& d : {sigma1, BackgroundDensity::cylinder(1.0, 0.2, 20.0)}) {
    const MomentVector mv = forward_moments(m, d, 16);
    const DualMoments dm = dual_moments(m, d, 16);
    const TauSample a = tau_double_integral(m, d, 1e-9);
    const TauSample b = tau_via_moments(mv, dm, d, m);
    CHECK(std::abs(a.value - b.value) < 1e-8);
    CHECK(std::abs(a.value - b.value) <= a.estimated_error + b.estimated_error + 1e-12);
    // too few moments: the tail estimate has to cover the gap
    const TauSample c = tau_via_moments(forward_moments(m, d, 4), dual_moments(m, d, 4), d, m);
    CHECK(std::abs(a.value - c.value) <= a.estimated_error + c.estimated_error);
  }
}

TEST_CASE("t0 derivatives on the t0-line") {
  for (double t0 : {1.0, 2.0}) {
    TauEvaluator ev(sigma1, {line(t0)});
    const auto d1 = ev.derivative(std::vector<Axis>{{Coord::T0, 0}});
    const auto d2 = ev.derivative(std::vector<Axis>{{Coord::T0, 0}, {Coord::T0, 0}});
    const auto d3 = ev.derivative(std::vector<Axis>{{Coord::T0, 0}, {Coord::T0, 0}, {Coord::T0, 0}});
    CHECK(std::abs(d1.value.real() - (t0 * std::log(t0) - t0)) < 1e-6);
    CHECK(std::abs(d2.value.real() - std::log(t0)) < 1e-4);
    CHECK(std::abs(d3.value.real() - 1.0 / t0) < 1e-3);
    CHECK(d1.error < 1e-5);
  }
  TauEvaluator ev(cyl, {line(1.5)});
  const auto d3 = ev.derivative(std::vector<Axis>{{Coord::T0, 0}, {Coord::T0, 0}, {Coord::T0, 0}});
  CHECK(std::abs(d3.value.real() - 1.0) < 1e-3);
}

TEST_CASE("moment derivatives vanish on the t0-line") {
  TauEvaluator ev(sigma1, {line(1.0)}, {.axes = 3});
  for (int k = 1; k <= 3; ++k) {
    const auto dk = ev.derivative(std::vector<Axis>{{Coord::T, k}});
    CHECK(std::abs(dk.value) < 1e-8);
  }
}

TEST_CASE("gradient of F gives the dual moments") {
  const ExteriorMap m(1.0, {0.0, 0.1, 0.02});
  for (const auto& d : {sigma1, BackgroundDensity::cylinder(1.0, 0.2, 20.0)}) {
    const MomentVector mv = forward_moments(m, d, 3);
    TauEvaluator ev(d, {mv});
    const DualMoments& dm = ev.base_dual();
    const auto d0 = ev.derivative(std::vector<Axis>{{Coord::T0, 0}});
    CHECK(std::abs(d0.value.real() - dm.v0) / (1 + std::abs(dm.v0)) < 1e-3);
    for (int k = 1; k <= 3; ++k) {
      CAPTURE(k);
      const auto dk = ev.derivative(std::vector<Axis>{{Coord::T, k}});
      CHECK(std::abs(dk.value - dm.vk(k)) / (1 + std::abs(dm.vk(k))) < 1e-3);
    }
  }
}

TEST_CASE("lattice evaluations are cached and thread independent") {
  TauEvaluator ev(sigma1, {line(1.0)}, {.axes = 1});
  ev.derivative(std::vector<Axis>{{Coord::T, 1}});
  const size_t n = ev.solves();
  ev.derivative(std::vector<Axis>{{Coord::T, 1}});
  CHECK(ev.solves() == n);
}
