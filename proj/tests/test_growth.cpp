#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dtoda/error.hpp"
#include "dtoda/geometry.hpp"
#include "dtoda/growth.hpp"

using namespace dtoda;

namespace {
const double kPi = std::numbers::pi;
const auto sigma1 = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 100.0);

double mean_r2(const ExteriorMap& m) {
  double acc = 0.0;
  for (cplx z : boundary_samples(m, 256)) acc += std::norm(z);
  return acc / 256;
}

// Offset from p along the unit normal n to the nearest crossing of the polygon.
double offset_to(const std::vector<cplx>& poly, cplx p, cplx n) {
  double best = INFINITY;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    const double a = ((poly[i] - p) * std::conj(n)).imag(), b = ((poly[i + 1] - p) * std::conj(n)).imag();
    if ((a > 0) == (b > 0)) continue;
    const cplx q = poly[i] + a / (a - b) * (poly[i + 1] - poly[i]);
    const double d = ((q - p) * std::conj(n)).real();
    if (std::abs(d) < std::abs(best)) best = d;
  }
  return best;
}
}  // namespace

TEST_CASE("moment-driven growth of circles") {
  const Trajectory a = grow_moment_driven(growth_state(ExteriorMap::circle(1.0, 2), sigma1), sigma1, 0.1, 10);
  CHECK(a.states.back().t0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a.states.back().map.conformal_radius() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(a.max_drift() == 0.0);

  const auto cyl = BackgroundDensity::cylinder(1.0, 1.0, 100.0);
  const Trajectory b = grow_moment_driven(growth_state(ExteriorMap::circle(1.0, 2), cyl), cyl, 0.1, 10);
  CHECK(b.states.front().t0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::pow(b.states.back().map.conformal_radius(), 2) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("moment-driven area increments equal dt0") {
  const ExteriorMap m0(1.0, {0.0, 0.15, 0.0, 0.03});
  const Trajectory tr = grow_moment_driven(growth_state(m0, sigma1), sigma1, 0.05, 10);
  for (size_t n = 1; n < tr.states.size(); ++n) {
    const double t_prev = forward_moments(tr.states[n - 1].map, sigma1, 1).t0;
    const double t_next = forward_moments(tr.states[n].map, sigma1, 1).t0;
    CHECK(std::abs(t_next - t_prev - 0.05) < 1e-6);
  }
  const auto narrow = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 2.0);
  CHECK_THROWS_AS(grow_moment_driven(growth_state(ExteriorMap::circle(1.0), narrow), narrow, 0.5, 4), Error);
}

TEST_CASE("front tracking on circles follows the t0-line law") {
  const double dt = 0.01;
  const Trajectory a = grow_front_tracking(ExteriorMap::circle(1.0), sigma1, dt, 1, {.refit_J = 4});
  CHECK(std::abs(mean_r2(a.states.back().map) - 1.0 - dt) < 1e-4);
  // d log r^2 / dt0 = 1 / R on the cylinder
  const auto cyl = BackgroundDensity::cylinder(2.0, 0.5, 50.0);
  const Trajectory b = grow_front_tracking(ExteriorMap::circle(1.0), cyl, dt, 1, {.refit_J = 4});
  CHECK(std::abs(std::log(mean_r2(b.states.back().map)) - dt / 2.0) < 1e-4);
}

TEST_CASE("front tracking agrees with moment-driven growth") {
  const ExteriorMap m0(1.0, {0.0, 0.15, 0.0, 0.03});
  const GrowthState s0 = growth_state(m0, sigma1);
  const double dt = 0.2 * s0.t0 / 40;
  const Trajectory md = grow_moment_driven(s0, sigma1, dt, 40);
  const Trajectory ft = grow_front_tracking(m0, sigma1, dt, 40, {.refit_J = 8, .heun = true});
  const auto a = boundary_samples(md.states.back().map, 1024), b = boundary_samples(ft.states.back().map, 1024);
  CHECK(hausdorff(a, b) < 1e-3 * diameter(a));
  CHECK(ft.max_drift() < 1e-4 * s0.t0);
  for (size_t n = 1; n < ft.states.size(); ++n) CHECK(ft.states[n].t0 > ft.states[n - 1].t0);
}

TEST_CASE("fit recovers a map from its boundary") {
  const ExteriorMap m(1.2, {0.05, 0.2, cplx(0.0, 0.05), 0.01});
  double res = 1.0;
  const ExteriorMap f = fit_map(boundary_samples(m, 256), 6, nullptr, &res);
  CHECK(res < 1e-12);
  CHECK(std::abs(f.conformal_radius() - 1.2) < 1e-10);
  for (int k = 0; k <= 3; ++k) CHECK(std::abs(f.coeffs()[static_cast<size_t>(k)] - m.coeffs()[static_cast<size_t>(k)]) < 1e-10);
  CHECK(std::abs(f.coeffs()[5]) < 1e-10);
}

TEST_CASE("front tracking rejects bad curves") {
  BoundaryCurve eight;
  for (int j = 0; j < 64; ++j) {
    const double th = 2 * kPi * j / 64;
    eight.theta.push_back(th);
    eight.samples.push_back(cplx(std::sin(th), std::sin(2 * th)));
  }
  try {
    grow_front_tracking(eight, sigma1, 0.01, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SelfIntersection);
  }
  // a strongly perturbed boundary cannot be represented with two modes
  BoundaryCurve star = boundary_curve(ExteriorMap(1.0, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1}), 256);
  try {
    grow_front_tracking(star, sigma1, 0.01, 1, {.refit_J = 2});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FitResidualTooLarge);
  }
}

TEST_CASE("cone and cylinder images") {
  const BoundaryCurve circle = boundary_curve(ExteriorMap::circle(1.5), 128);
  const BoundaryCurve id = map_to_cone(circle, 1.0);
  for (cplx z : circle.samples) {
    double nearest = INFINITY;
    for (cplx Z : id.samples) nearest = std::min(nearest, std::abs(Z - z));
    CHECK(nearest < 1e-14);
  }
  CHECK(std::abs(id.samples.back() - id.samples.front()) < 1e-14);

  const BoundaryCurve half = map_to_cone(circle, 0.5);
  for (cplx Z : half.samples) CHECK(std::abs(std::abs(Z) - std::sqrt(1.5)) < 1e-12);
  CHECK(std::abs(std::arg(half.samples.back()) - kPi) < 1e-12);
  CHECK(std::abs(std::abs(half.samples.front()) - std::abs(half.samples.back())) < 1e-14);

  const BoundaryCurve ell = map_to_cone(boundary_curve(ExteriorMap(1.0, {0.0, 0.2}), 256), 0.5);
  for (cplx Z : ell.samples) CHECK(Z.imag() >= -1e-15);

  const BoundaryCurve cyl = map_to_cylinder(circle, 2.0, 0.5);
  for (cplx Z : cyl.samples) CHECK(std::abs(Z.real() - 2.0 * std::log(3.0)) < 1e-12);
  CHECK(std::abs(cyl.samples.back().imag() - 4 * kPi) < 1e-12);
  for (cplx Z : map_to_cylinder(boundary_curve(ExteriorMap::circle(0.5), 64), 2.0, 0.5).samples)
    CHECK(std::abs(Z.real()) < 1e-14);

  BoundaryCurve shifted = circle;
  for (cplx& z : shifted.samples) z += 3.0;
  CHECK_THROWS_AS(map_to_cone(shifted, 0.5), Error);
}

TEST_CASE("transformed fronts move with the harmonic-measure velocity") {
  // z-plane velocity |w'| / (2 sigma) becomes (alpha^2 / 2c)|omega'| on the cone
  // per unit t0, i.e. (alpha / 2)|omega'| per unit of t = alpha t0 / c.
  const double alpha = 0.5, c = 0.8, dt0 = 2e-3;
  const auto d = BackgroundDensity::homogeneous(c, alpha, 0.0, 100.0);
  // Fixed t_k do not keep the map polynomial when sigma is not constant.
  const ExteriorMap m0 = ExteriorMap(1.0, {0.0, 0.1, 0.02}).with_truncation(24);
  const Trajectory tr = grow_moment_driven(growth_state(m0, d), d, dt0, 2);
  const int M = 4096;
  const BoundaryCurve prev = map_to_cone(boundary_curve(tr.states[0].map, M), alpha);
  const BoundaryCurve mid = map_to_cone(boundary_curve(tr.states[1].map, M), alpha);
  const BoundaryCurve next = map_to_cone(boundary_curve(tr.states[2].map, M), alpha);
  double worst = 0.0;
  for (int j = 5; j < M; j += 97) {
    const size_t i = static_cast<size_t>(j);
    const cplx Z = mid.samples[i], n = mid.normals[i];
    const double V = (offset_to(next.samples, Z, n) - offset_to(prev.samples, Z, n)) / (2 * dt0);
    const cplx w = std::polar(1.0, mid.theta[i]);
    const cplx z = tr.states[1].map.eval(w);
    const double omega_prime = 1.0 / (std::abs(tr.states[1].map.derivative(w)) * alpha * std::pow(std::abs(z), alpha - 1));
    const double expected = alpha * alpha / (2 * c) * omega_prime;
    worst = std::max(worst, std::abs(V - expected) / expected);
    CHECK(std::abs(V * c / alpha - 0.5 * alpha * omega_prime) / expected < 1e-3);
  }
  CHECK(worst < 1e-3);

  const double R = 1.5, r0 = 0.5;
  const auto cyl = BackgroundDensity::cylinder(R, r0 * r0, 100.0);
  const Trajectory tc = grow_moment_driven(growth_state(m0, cyl), cyl, dt0, 2);
  const BoundaryCurve p2 = map_to_cylinder(boundary_curve(tc.states[0].map, M), R, r0);
  const BoundaryCurve m2 = map_to_cylinder(boundary_curve(tc.states[1].map, M), R, r0);
  const BoundaryCurve n2 = map_to_cylinder(boundary_curve(tc.states[2].map, M), R, r0);
  for (int j = 5; j < M; j += 97) {
    const size_t i = static_cast<size_t>(j);
    const double V = (offset_to(n2.samples, m2.samples[i], m2.normals[i]) -
                      offset_to(p2.samples, m2.samples[i], m2.normals[i])) / (2 * dt0);
    const cplx w = std::polar(1.0, m2.theta[i]);
    const cplx z = tc.states[1].map.eval(w);
    const double omega_prime = std::abs(z) / (std::abs(tc.states[1].map.derivative(w)) * R);
    CHECK(std::abs(V - 0.5 * R * omega_prime) / (0.5 * R * omega_prime) < 1e-3);
  }
}
