#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dtoda/error.hpp"
#include "dtoda/moments.hpp"
#include "dtoda/quadrature.hpp"

using namespace dtoda;

namespace {
const double kPi = std::numbers::pi;
const auto sigma1 = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 100.0);
ExteriorMap ellipse(double u1) { return ExteriorMap(1.0, {0.0, u1}); }

// Independent oracle: tensor grid over the exterior part of the annulus,
// angle of the boundary parametrized by theta, Gauss-Legendre in radius.
cplx exterior_moment_oracle(const ExteriorMap& m, const BackgroundDensity& d, int k, int Mt, int nr) {
  const GaussRule& g = gauss_legendre(nr);
  const double r1 = std::sqrt(d.r1_sq());
  cplx acc = 0.0;
  for (int j = 0; j < Mt; ++j) {
    const cplx w = std::polar(1.0, 2 * kPi * j / Mt);
    const cplx z = m.eval(w);
    const double dphi = (cplx(0, 1) * w * m.derivative(w) / z).imag();
    const double rb = std::abs(z);
    const cplx e = std::polar(1.0, -k * std::arg(z));
    double radial = 0.0;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      const double rho = rb + 0.5 * (1 + g.nodes[i]) * (r1 - rb);
      radial += g.weights[i] * std::pow(rho, 1 - k) * d.sigma(rho * rho);
    }
    acc += e * dphi * radial * 0.5 * (r1 - rb);
  }
  return -acc * (2 * kPi / Mt) / (kPi * k);
}
}  // namespace

TEST_CASE("forward moments of circles") {
  const MomentVector mv = forward_moments(ExteriorMap::circle(2.0), sigma1, 6, 256);
  CHECK(mv.t0 == doctest::Approx(4.0).epsilon(1e-14));
  for (cplx t : mv.t) CHECK(std::abs(t) < 1e-14);
  const auto cyl = BackgroundDensity::cylinder(1.5, 0.5, 20.0);
  const MomentVector mc = forward_moments(ExteriorMap::circle(1.7), cyl, 4, 256);
  CHECK(mc.t0 == doctest::Approx(1.5 * std::log(1.7 * 1.7 / 0.5)).epsilon(1e-13));
}

TEST_CASE("ellipse moments against the area-integral oracle") {
  const MomentVector mv = forward_moments(ellipse(0.2), sigma1, 3, 256);
  CHECK(std::abs(mv.tk(1)) < 1e-14);
  CHECK(std::abs(mv.tk(3)) < 1e-14);
  CHECK(std::abs(mv.tk(2) - 0.1) < 1e-13);
  const cplx oracle = exterior_moment_oracle(ellipse(0.2), sigma1, 2, 2048, 64);
  CHECK(std::abs(mv.tk(2) - oracle) < 1e-9);
  const auto cyl = BackgroundDensity::cylinder(1.0, 0.3, 5.0);
  const ExteriorMap m(1.0, {cplx(0.02, 0.01), 0.15, cplx(0.03, 0.02)});
  const MomentVector mc = forward_moments(m, cyl, 3, 256);
  for (int k = 1; k <= 3; ++k) CHECK(std::abs(mc.tk(k) - exterior_moment_oracle(m, cyl, k, 2048, 64)) < 1e-9);
}

TEST_CASE("dual moments on the t0-line") {
  const DualMoments dm = dual_moments(ExteriorMap::circle(1.3), sigma1, 4, 256);
  const double t0 = 1.69;
  CHECK(dm.v0 == doctest::Approx(t0 * std::log(t0) - t0).epsilon(1e-13));
  for (cplx v : dm.v) CHECK(std::abs(v) < 1e-14);
  const auto cyl = BackgroundDensity::cylinder(2.0, 0.5, 20.0);
  const double tc = 2.0 * std::log(1.69 / 0.5);
  const DualMoments dc = dual_moments(ExteriorMap::circle(1.3), cyl, 4, 256);
  CHECK(dc.v0 == doctest::Approx(tc * tc / 4.0 + tc * std::log(0.5)).epsilon(1e-13));
  CHECK(dc.u0 == 0.0);
}

TEST_CASE("annulus independence of t_k and v_k") {
  const ExteriorMap m(1.0, {cplx(0.02, 0.01), 0.15, cplx(0.03, 0.02)});
  const auto a = BackgroundDensity::homogeneous(1.0, 0.8, 0.1, 4.0);
  const auto b = BackgroundDensity::homogeneous(1.0, 0.8, 0.3, 9.0);
  const MomentVector ta = forward_moments(m, a, 5), tb = forward_moments(m, b, 5);
  const DualMoments va = dual_moments(m, a, 5), vb = dual_moments(m, b, 5);
  for (int k = 1; k <= 5; ++k) {
    CHECK(std::abs(ta.tk(k) - tb.tk(k)) < 1e-10);
    CHECK(std::abs(va.vk(k) - vb.vk(k)) < 1e-10);
  }
}

TEST_CASE("area identity") {
  const ExteriorMap m(1.0, {cplx(0.02, 0.01), 0.15, cplx(0.03, 0.02)});
  for (const auto& d : {BackgroundDensity::homogeneous(1.0, 0.8, 0.1, 4.0), BackgroundDensity::cylinder(1.0, 0.3, 5.0),
                        BackgroundDensity::general(0.7, 0.9, 4, 0.4, 9.0)}) {
    const double area = polar_integral(m, d, [&](double x) { return d.sigma(x); }, 512, 48);
    CHECK(area == doctest::Approx(forward_moments(m, d, 0).t0 - d.inner_flux()).epsilon(1e-11));
  }
}

TEST_CASE("potential field branches") {
  const auto d = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 100.0);
  const ExteriorMap c = ExteriorMap::circle(1.5);
  const MomentVector mv = forward_moments(c, d, 4);
  const DualMoments dm = dual_moments(c, d, 4);
  const PotentialValue out = potential_field(c, mv, dm, d, cplx(3.0, 1.0));
  CHECK_FALSE(out.interior);
  CHECK(out.value == doctest::Approx(dm.v0).epsilon(1e-14));
  const cplx zi(0.4, 0.7);
  const PotentialValue in = potential_field(c, mv, dm, d, zi);
  CHECK(in.interior);
  CHECK(in.value == doctest::Approx(-std::norm(zi) + mv.t0 * std::log(std::norm(zi))).epsilon(1e-13));
  // Continuity across a non-circular boundary.
  const ExteriorMap m(1.2, {0.0, 0.1, 0.0, cplx(0.01, 0.005)});
  const MomentVector tm = forward_moments(m, d, 40);
  const DualMoments vm = dual_moments(m, d, 40);
  for (double th : {0.0, 1.0, 2.5, 4.0}) {
    const cplx zb = m.eval(std::polar(1.0, th));
    CHECK(std::abs(potential_interior(tm, d, zb) - potential_exterior(vm, zb)) < 1e-6);
  }
}

TEST_CASE("Cauchy transform expansions and jump") {
  const auto d = BackgroundDensity::cylinder(1.0, 0.2, 5.0);
  const ExteriorMap m(1.2, {0.0, 0.1, cplx(0.02, 0.01)});
  const MomentVector tm = forward_moments(m, d, 30);
  const DualMoments vm = dual_moments(m, d, 30);
  const cplx zin(0.1, 0.05);
  cplx series = 0.0;
  for (int k = 1; k <= 30; ++k) series += static_cast<double>(k) * tm.tk(k) * std::pow(zin, k - 1);
  CHECK(std::abs(cauchy_transform(m, d, zin, 1024) - series) < 1e-10);
  const cplx zout(4.0, 3.0);
  cplx outer = -tm.t0 / zout;
  for (int k = 1; k <= 30; ++k) outer -= vm.vk(k) * std::pow(zout, -k - 1);
  CHECK(std::abs(cauchy_transform(m, d, zout, 1024) - outer) < 1e-10);
  const int M = 4096;
  const cplx w = std::polar(1.0, 0.7);
  const cplx zb = m.eval(w);
  const cplx n = w * m.derivative(w) / std::abs(m.derivative(w));
  const double step = 2 * kPi * 1.5 / M;
  auto jump_at = [&](double dist) {
    return cauchy_transform(m, d, zb - dist * n, M) - cauchy_transform(m, d, zb + dist * n, M);
  };
  // One-sided limits by quadratic extrapolation from 10, 20 and 30 arc steps.
  const cplx jump = 3.0 * jump_at(10 * step) - 3.0 * jump_at(20 * step) + jump_at(30 * step);
  const double x = std::norm(zb);
  CHECK(std::abs(jump - std::conj(zb) * d.slope(x)) < 1e-3);
  CHECK_THROWS_AS(cauchy_transform(m, d, zb, 1024), Error);
}

TEST_CASE("boundary outside annulus") {
  try {
    forward_moments(ExteriorMap::circle(3.0), BackgroundDensity::cylinder(1.0, 1.0, 4.0), 2);
    FAIL("expected BoundaryOutsideAnnulus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryOutsideAnnulus);
  }
}
