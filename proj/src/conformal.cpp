#include "dtoda/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dtoda/error.hpp"

namespace dtoda {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx unit(double theta) { return std::polar(1.0, theta); }
}  // namespace

ExteriorMap::ExteriorMap(double r, std::vector<cplx> coeffs) : r_(r), u_(std::move(coeffs)) {
  if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidParameter, "conformal radius must be positive");
  if (u_.empty()) u_.push_back(cplx(0.0));
}

ExteriorMap ExteriorMap::circle(double r, int J) {
  return ExteriorMap(r, std::vector<cplx>(static_cast<size_t>(std::max(J, 0) + 1), cplx(0.0)));
}

cplx ExteriorMap::operator()(cplx w) const {
  if (std::abs(w) < 1.0 - 1e-14) fail(ErrorCode::InsideDisk, "|w| < 1");
  return eval(w);
}

cplx ExteriorMap::eval(cplx w) const {
  const cplx q = 1.0 / w;
  cplx acc = 0.0;
  for (size_t j = u_.size(); j-- > 0;) acc = acc * q + u_[j];
  return r_ * w + acc;
}

cplx ExteriorMap::derivative(cplx w) const {
  const cplx q = 1.0 / w;
  cplx acc = 0.0;
  for (size_t j = u_.size(); j-- > 1;) acc = acc * q + static_cast<double>(j) * u_[j];
  return r_ - acc * q * q;
}

cplx ExteriorMap::second_derivative(cplx w) const {
  const cplx q = 1.0 / w;
  cplx acc = 0.0;
  for (size_t j = u_.size(); j-- > 1;) acc = acc * q + static_cast<double>(j * (j + 1)) * u_[j];
  return acc * q * q * q;
}

ExteriorMap ExteriorMap::pruned(double threshold) const {
  std::vector<cplx> u = u_;
  for (auto& c : u)
    if (std::abs(c) < threshold) c = 0.0;
  return ExteriorMap(r_, std::move(u));
}

ExteriorMap ExteriorMap::with_truncation(int J) const {
  std::vector<cplx> u = u_;
  u.resize(static_cast<size_t>(std::max(J, 0) + 1), cplx(0.0));
  return ExteriorMap(r_, std::move(u));
}

cplx eval_map(const ExteriorMap& m, cplx w) { return m(w); }

int default_samples(const ExteriorMap& m, int floor) {
  int M = std::max(floor, 16 * (m.truncation() + 1));
  int p = 1;
  while (p < M) p *= 2;
  return p;
}

ExteriorMap random_map(std::uint64_t seed, double r, int J, double scale) {
  if (!(r > 0.0) || J < 0 || !(scale >= 0.0)) fail(ErrorCode::InvalidParameter, "random map needs r > 0, J >= 0, scale >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<cplx> u(static_cast<size_t>(J + 1), cplx(0.0));
    for (int j = 1; j <= J; ++j) {
      const double rad = scale * r * std::sqrt(unif(rng)), ang = kTwoPi * unif(rng);
      u[static_cast<size_t>(j)] = std::polar(rad, ang);
    }
    ExteriorMap m(r, std::move(u));
    if (univalence_check(m, default_samples(m, 1024))) return m;
  }
  fail(ErrorCode::UnivalenceLost, "no univalent map found; lower the scale");
}

std::vector<cplx> boundary_samples(const ExteriorMap& m, int M) {
  std::vector<cplx> z(static_cast<size_t>(M));
  for (int k = 0; k < M; ++k) z[static_cast<size_t>(k)] = m.eval(unit(kTwoPi * k / M));
  return z;
}

BoundaryCurve boundary_curve(const ExteriorMap& m, int M) {
  if (M < 3) fail(ErrorCode::InvalidParameter, "boundary curve needs at least 3 samples");
  BoundaryCurve c;
  c.theta.resize(static_cast<size_t>(M));
  c.samples.resize(c.theta.size());
  c.tangents.resize(c.theta.size());
  c.normals.resize(c.theta.size());
  for (int k = 0; k < M; ++k) {
    const size_t i = static_cast<size_t>(k);
    const double th = kTwoPi * k / M;
    const cplx w = unit(th);
    c.theta[i] = th;
    c.samples[i] = m.eval(w);
    c.tangents[i] = cplx(0.0, 1.0) * w * m.derivative(w);
    const double len = std::abs(c.tangents[i]);
    if (len < 1e-12) {
      std::ostringstream os;
      os << "degenerate tangent at theta = " << th;
      fail(ErrorCode::DegenerateTangent, os.str());
    }
    c.normals[i] = cplx(0.0, -1.0) * c.tangents[i] / len;
  }
  return c;
}

namespace {

// Newton iteration for z(w) = target; returns false without convergence.
bool newton_invert(const ExteriorMap& m, cplx target, cplx& w) {
  const double scale = std::max(1.0, std::abs(target));
  for (int it = 0; it < 50; ++it) {
    const cplx f = m.eval(w) - target;
    const cplx d = m.derivative(w);
    if (std::abs(d) == 0.0 || !std::isfinite(std::abs(f))) return false;
    const cplx step = f / d;
    w -= step;
    if (std::abs(step) <= 1e-15 * std::abs(w)) {
      w -= (m.eval(w) - target) / m.derivative(w);
      return std::abs(m.eval(w) - target) <= 1e-12 * scale;
    }
  }
  return std::abs(m.eval(w) - target) <= 1e-12 * scale;
}

}  // namespace

cplx invert_point(const ExteriorMap& m, cplx z) {
  const int M = default_samples(m);
  const std::vector<cplx> poly = boundary_samples(m, M);
  if (winding_number(poly, z) != 0) fail(ErrorCode::PointInside, "point is enclosed by the boundary");
  cplx w = z / m.conformal_radius();
  if (newton_invert(m, z, w) && std::abs(w) >= 1.0 - 1e-12) return w;
  // Near the boundary the far-field guess can fall into another root;
  // restart from the nearest boundary sample pushed outward.
  size_t best = 0;
  for (size_t i = 1; i < poly.size(); ++i)
    if (std::abs(poly[i] - z) < std::abs(poly[best] - z)) best = i;
  const cplx w0 = unit(kTwoPi * static_cast<double>(best) / M);
  w = w0 * (1.0 + std::abs(poly[best] - z) / std::abs(m.derivative(w0)));
  if (newton_invert(m, z, w)) {
    if (std::abs(w) < 1.0 - 1e-12) fail(ErrorCode::PointInside, "preimage lies inside the unit disk");
    return w;
  }
  fail(ErrorCode::NoConvergence, "Newton inversion did not converge in 50 iterations");
}

double green_w(cplx wz, cplx wzeta) {
  return std::log(std::abs((wz - wzeta) / (wz * std::conj(wzeta) - 1.0)));
}

double green(const ExteriorMap& m, cplx z, cplx zeta) {
  if (std::abs(z - zeta) < 1e-14) fail(ErrorCode::CoincidentPoints, "green evaluated at coincident points");
  return green_w(invert_point(m, z), invert_point(m, zeta));
}

double green_normal_derivative(const ExteriorMap& m, cplx wa, cplx w) {
  return (1.0 - std::norm(wa)) / (std::norm(wa - w) * std::abs(m.derivative(w)));
}

bool univalence_check(const ExteriorMap& m, int M) {
  M = std::max({M, 4 * m.truncation(), 64});
  const double margin = 1e-10 * m.conformal_radius();
  std::vector<cplx> z(static_cast<size_t>(M));
  for (int k = 0; k < M; ++k) {
    const cplx w = unit(kTwoPi * k / M);
    if (std::abs(m.derivative(w)) <= margin) return false;
    z[static_cast<size_t>(k)] = m.eval(w);
  }
  if (!is_simple(z)) return false;
  // No zeros of z' outside the unit circle: winding of z' along |w| = rho is 0.
  const double rho = 1.0 + 1e-6;
  double total = 0.0;
  cplx prev = m.derivative(cplx(rho, 0.0));
  for (int k = 1; k <= M; ++k) {
    const cplx cur = m.derivative(rho * unit(kTwoPi * k / M));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return std::lround(total / kTwoPi) == 0;
}

}  // namespace dtoda
