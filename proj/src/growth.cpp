#include "dtoda/growth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dtoda/error.hpp"
#include "dtoda/geometry.hpp"
#include "dtoda/inverse.hpp"
#include "dtoda/kernels.hpp"

namespace dtoda {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);

int pow2_at_least(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// Trigonometric interpolant through samples at s_j = 2 pi j / M (M even).
// Modes below 1e-17 of the largest are dropped.
class TrigCurve {
 public:
  explicit TrigCurve(const std::vector<cplx>& q) {
    const int M = static_cast<int>(q.size());
    std::vector<cplx> roots(q.size());
    for (int j = 0; j < M; ++j) roots[static_cast<size_t>(j)] = std::polar(1.0, -kTwoPi * j / M);
    std::vector<cplx> c(q.size());
    double cmax = 0.0;
    for (int n = -M / 2; n < M / 2; ++n) {
      const int nn = (n % M + M) % M;
      cplx acc = 0.0;
      for (int j = 0; j < M; ++j) acc += q[static_cast<size_t>(j)] * roots[static_cast<size_t>((nn * j) % M)];
      c[static_cast<size_t>(n + M / 2)] = acc / static_cast<double>(M);
      cmax = std::max(cmax, std::abs(acc) / M);
    }
    for (int n = -M / 2 + 1; n < M / 2; ++n) {
      const cplx cn = c[static_cast<size_t>(n + M / 2)];
      if (std::abs(cn) > 1e-17 * cmax) modes_.push_back({static_cast<double>(n), cn});
    }
    nyquist_ = c[0];
    half_ = 0.5 * M;
  }

  void eval(double s, cplx& P, cplx& dP) const {
    P = nyquist_ * std::cos(half_ * s);
    dP = -nyquist_ * half_ * std::sin(half_ * s);
    for (const Mode& m : modes_) {
      const cplx t = m.c * cplx(std::cos(m.n * s), std::sin(m.n * s));
      P += t;
      dP += cplx(0.0, m.n) * t;
    }
  }

 private:
  struct Mode {
    double n;
    cplx c;
  };
  std::vector<Mode> modes_;
  cplx nyquist_;
  double half_ = 0.0;
};

// Signed distance from z along the unit normal n to the nearest crossing of
// the normal line with the marker polygon, refined on the interpolant.
double normal_offset(const TrigCurve& P, const std::vector<cplx>& q, cplx z, cplx n, size_t hint) {
  const size_t M = q.size();
  auto psi = [&](cplx p) { return ((p - z) * std::conj(n)).imag(); };
  double best = INFINITY, best_s = 0.0;
  auto scan = [&](size_t first, size_t count) {
    for (size_t c = 0; c < count; ++c) {
      const size_t i = (first + c) % M, k = (i + 1) % M;
      const double a = psi(q[i]), b = psi(q[k]);
      if ((a > 0.0) == (b > 0.0) && a != 0.0) continue;
      const double lam = a == b ? 0.0 : a / (a - b);
      const cplx p = q[i] + lam * (q[k] - q[i]);
      const double dist = ((p - z) * std::conj(n)).real();
      if (std::abs(dist) < std::abs(best)) {
        best = dist;
        best_s = kTwoPi * (static_cast<double>(i) + lam) / static_cast<double>(M);
      }
    }
  };
  // Markers are indexed like the fit samples, so the crossing is usually near
  // the hint; the full scan is the fallback.
  const size_t window = std::min<size_t>(M, 16);
  scan((hint + M - window / 2) % M, window);
  if (!std::isfinite(best)) scan(0, M);
  if (!std::isfinite(best)) return NAN;
  double s = best_s;
  cplx p, dp;
  for (int it = 0; it < 20; ++it) {
    P.eval(s, p, dp);
    const double f = psi(p), df = (dp * std::conj(n)).imag();
    if (df == 0.0) break;
    const double ds = std::clamp(-f / df, -kTwoPi / M, kTwoPi / M);
    s += ds;
    if (std::abs(ds) < 1e-14) break;
  }
  P.eval(s, p, dp);
  return ((p - z) * std::conj(n)).real();
}

ExteriorMap average(const ExteriorMap& a, const ExteriorMap& b) {
  const int J = std::max(a.truncation(), b.truncation());
  const ExteriorMap A = a.with_truncation(J), B = b.with_truncation(J);
  std::vector<cplx> u(static_cast<size_t>(J + 1));
  for (size_t k = 0; k < u.size(); ++k) u[k] = 0.5 * (A.coeffs()[k] + B.coeffs()[k]);
  return ExteriorMap(0.5 * (a.conformal_radius() + b.conformal_radius()), u);
}

struct Markers {
  std::vector<cplx> z, dz, normal;
  std::vector<double> velocity;
};

Markers markers(const ExteriorMap& m, const BackgroundDensity& d, int M) {
  Markers k;
  k.z.resize(static_cast<size_t>(M));
  k.dz = k.normal = k.z;
  k.velocity.resize(k.z.size());
  for (int j = 0; j < M; ++j) {
    const size_t i = static_cast<size_t>(j);
    const cplx w = std::polar(1.0, kTwoPi * j / M);
    k.z[i] = m.eval(w);
    k.dz[i] = m.derivative(w);
    const double x = std::norm(k.z[i]);
    if (!d.annulus().contains(x)) fail(ErrorCode::LeftAnnulus, "growing boundary left the annulus");
    k.normal[i] = w * k.dz[i] / std::abs(k.dz[i]);
    k.velocity[i] = 1.0 / (2.0 * d.sigma(x) * std::abs(k.dz[i]));
  }
  return k;
}

double cfl_limit(const Markers& k, const BackgroundDensity& d, double cfl) {
  double dt = INFINITY;
  const size_t M = k.z.size();
  for (size_t i = 0; i < M; ++i) {
    const double spacing = std::abs(k.z[(i + 1) % M] - k.z[i]);
    dt = std::min(dt, cfl * d.sigma(std::norm(k.z[i])) * spacing * std::abs(k.dz[i]));
  }
  return dt;
}

ExteriorMap euler_step(const ExteriorMap& m, const BackgroundDensity& d, double dt, int M,
                       const FrontTrackingOptions& opt) {
  const Markers k = markers(m, d, M);
  std::vector<cplx> q(k.z.size());
  for (size_t i = 0; i < q.size(); ++i) q[i] = k.z[i] + dt * k.velocity[i] * k.normal[i];
  if (!is_simple(q)) fail(ErrorCode::SelfIntersection, "marker curve self-intersects");
  double res = 0.0;
  ExteriorMap out = fit_map(q, opt.refit_J, &m, &res);
  const double scale = diameter(q);
  if (res > opt.fit_tol * scale) {
    std::ostringstream os;
    os << "refit residual " << res << " exceeds " << opt.fit_tol << " x diameter at J = " << opt.refit_J;
    fail(ErrorCode::FitResidualTooLarge, os.str());
  }
  return out;
}

void record(Trajectory& tr, const ExteriorMap& m, const BackgroundDensity& d, const MomentVector& conserved,
            int step) {
  const int N = conserved.order();
  const MomentVector mv = forward_moments(m, d, std::max(1, N));
  std::vector<double> drift(static_cast<size_t>(N));
  for (int k = 1; k <= N; ++k) drift[static_cast<size_t>(k - 1)] = std::abs(mv.tk(k) - conserved.tk(k));
  if (!tr.states.empty() && !(mv.t0 > tr.states.back().t0))
    fail(ErrorCode::NonMonotone, "t0 failed to increase along the trajectory");
  tr.states.push_back({m, mv.t0, conserved, step});
  tr.drift_report.push_back(std::move(drift));
}

}  // namespace

const char* to_string(GrowthMethod m) { return m == GrowthMethod::MomentDriven ? "moment" : "front"; }

double Trajectory::max_drift() const {
  double out = 0.0;
  for (const auto& row : drift_report)
    for (double x : row) out = std::max(out, x);
  return out;
}

GrowthState growth_state(const ExteriorMap& m, const BackgroundDensity& d, int N) {
  if (N <= 0) N = m.truncation() + 1;
  const MomentVector mv = forward_moments(m, d, N);
  MomentVector conserved = mv;
  conserved.t0 = 0.0;
  return {m, mv.t0, conserved, 0};
}

Trajectory grow_moment_driven(const GrowthState& s0, const BackgroundDensity& d, double dt0, int steps) {
  if (!(dt0 > 0.0)) fail(ErrorCode::InvalidParameter, "dt0 must be positive");
  if (steps < 0) fail(ErrorCode::InvalidParameter, "steps must be non-negative");
  Trajectory tr;
  tr.method = GrowthMethod::MomentDriven;
  tr.states.push_back(s0);
  tr.drift_report.emplace_back(static_cast<size_t>(s0.conserved.order()), 0.0);
  ExteriorMap m = s0.map;
  for (int n = 1; n <= steps; ++n) {
    MomentVector targets = s0.conserved;
    targets.t0 = s0.t0 + n * dt0;
    if (!d.admissible(targets.t0)) {
      std::ostringstream os;
      os.precision(17);
      os << "t0 = " << targets.t0 << " leaves the admissible interval [" << d.t0_min() << ", " << d.t0_max() << "]";
      fail(ErrorCode::AdmissibleIntervalExceeded, os.str());
    }
    // Predictor: scale by the radius ratio of the concentric circles.
    const double t_old = std::clamp(targets.t0 - dt0, d.t0_min(), d.t0_max());
    const double x_old = d.radius_sq_for_t0(t_old), x_new = d.radius_sq_for_t0(targets.t0);
    const double lam = std::sqrt(x_new / x_old);
    std::vector<cplx> u = m.coeffs();
    for (auto& c : u) c *= lam;
    m = solve_domain({targets, d, ExteriorMap(lam * m.conformal_radius(), u)}).map;
    tr.states.push_back({m, targets.t0, s0.conserved, n});
    // t_k are targets of the solve, so they do not drift by construction.
    tr.drift_report.emplace_back(static_cast<size_t>(s0.conserved.order()), 0.0);
    ++tr.substeps;
  }
  return tr;
}

Trajectory grow_front_tracking(const ExteriorMap& m0, const BackgroundDensity& d, double dt, int steps,
                               const FrontTrackingOptions& opt) {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidParameter, "dt must be positive");
  if (steps < 0) fail(ErrorCode::InvalidParameter, "steps must be non-negative");
  if (opt.refit_J < 0) fail(ErrorCode::InvalidParameter, "refit_J must be non-negative");
  const int M = opt.markers > 0 ? pow2_at_least(opt.markers) : pow2_at_least(std::max(256, 16 * (opt.refit_J + 1)));
  Trajectory tr;
  tr.method = GrowthMethod::FrontTracking;
  const GrowthState s0 = growth_state(m0, d, opt.refit_J + 1);
  tr.states.push_back(s0);
  tr.drift_report.emplace_back(static_cast<size_t>(s0.conserved.order()), 0.0);
  ExteriorMap m = m0.with_truncation(opt.refit_J);
  for (int n = 1; n <= steps; ++n) {
    const double limit = cfl_limit(markers(m, d, M), d, opt.cfl);
    const int sub = std::max(1, static_cast<int>(std::ceil(dt / limit - 1e-12)));
    const double h = dt / sub;
    for (int s = 0; s < sub; ++s) {
      const ExteriorMap m1 = euler_step(m, d, h, M, opt);
      m = opt.heun ? average(m, euler_step(m1, d, h, M, opt)) : m1;
      ++tr.substeps;
    }
    if (!univalence_check(m, M)) fail(ErrorCode::UnivalenceLost, "refitted map is not univalent");
    record(tr, m, d, s0.conserved, n);
  }
  return tr;
}

Trajectory grow_front_tracking(const BoundaryCurve& c0, const BackgroundDensity& d, double dt, int steps,
                               const FrontTrackingOptions& opt) {
  if (c0.samples.size() < 8) fail(ErrorCode::InvalidParameter, "initial curve needs at least 8 samples");
  if (!is_simple(c0.samples)) fail(ErrorCode::SelfIntersection, "initial curve is not simple");
  double res = 0.0;
  const ExteriorMap m0 = fit_map(c0.samples, opt.refit_J, nullptr, &res);
  if (res > opt.fit_tol * diameter(c0.samples))
    fail(ErrorCode::FitResidualTooLarge, "initial curve is not representable at the requested truncation");
  return grow_front_tracking(m0, d, dt, steps, opt);
}

ExteriorMap fit_map(const std::vector<cplx>& curve, int J, const ExteriorMap* guess, double* residual) {
  const int M = static_cast<int>(curve.size());
  if (M < 8 || M % 2) fail(ErrorCode::InvalidParameter, "fit needs an even number of samples, at least 8");
  if (winding_number(curve, 0.0) != 1) fail(ErrorCode::InvalidParameter, "curve must wind once around the origin");
  ExteriorMap m;
  if (guess) {
    m = guess->with_truncation(J);
  } else {
    // Exact when the samples already sit at equally spaced w on the circle.
    auto mode = [&](int k) {
      cplx acc = 0.0;
      for (int j = 0; j < M; ++j) acc += curve[static_cast<size_t>(j)] * std::polar(1.0, -kTwoPi * k * j / M);
      return acc / static_cast<double>(M);
    };
    const cplx c1 = mode(1);
    const cplx rot = std::abs(c1) > 0.0 ? c1 / std::abs(c1) : 1.0;
    std::vector<cplx> u(static_cast<size_t>(J + 1));
    cplx rk = 1.0;
    for (int k = 0; k <= J; ++k, rk *= rot) u[static_cast<size_t>(k)] = k < M / 2 ? mode(-k) * rk : 0.0;
    m = ExteriorMap(std::abs(c1), u);
  }
  const TrigCurve P(curve);
  const double scale = diameter(curve);
  ExteriorMap best = m;
  double best_res = INFINITY, prev_res = INFINITY;
  std::vector<cplx> w(static_cast<size_t>(M)), dz(w.size()), g(w.size());
  std::vector<double> f(w.size()), dist(w.size());
  for (int j = 0; j < M; ++j) w[static_cast<size_t>(j)] = std::polar(1.0, kTwoPi * j / M);
  for (int it = 0; it < 40; ++it) {
    kernels::for_each_index(w.size(), [&](size_t j) {
      const cplx z = m.eval(w[j]);
      dz[j] = m.derivative(w[j]);
      const cplx n = w[j] * dz[j] / std::abs(dz[j]);
      dist[j] = normal_offset(P, curve, z, n, j);
    });
    double res = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
      if (std::isnan(dist[j])) fail(ErrorCode::FitResidualTooLarge, "normal line misses the marker curve");
      res = std::max(res, std::abs(dist[j]));
      f[j] = dist[j] / std::abs(dz[j]);
    }
    if (res < best_res) {
      best_res = res;
      best = m;
    }
    if (res > 0.25 * prev_res) break;  // stalled at the truncation floor
    prev_res = res;
    if (res <= 1e-13 * scale) break;
    // g analytic outside the disk with Re g = f on the circle; dz = w z' g.
    std::vector<cplx> fh(static_cast<size_t>(M / 2));
    for (int k = 0; k < M / 2; ++k) {
      cplx acc = 0.0;
      for (int j = 0; j < M; ++j) acc += f[static_cast<size_t>(j)] * w[static_cast<size_t>((j * k) % M)];
      fh[static_cast<size_t>(k)] = acc / static_cast<double>(M);
    }
    cplx dr = 0.0;
    std::vector<cplx> du(static_cast<size_t>(J + 1), 0.0);
    for (size_t j = 0; j < w.size(); ++j) {
      cplx gj = fh[0].real();
      const cplx wi = std::conj(w[j]);
      cplx p = 1.0;
      for (int k = 1; k < M / 2; ++k) {
        p *= wi;
        gj += 2.0 * fh[static_cast<size_t>(k)] * p;
      }
      const cplx delta = w[j] * dz[j] * gj;
      dr += delta * wi;
      cplx wk = 1.0;
      for (int k = 0; k <= J; ++k) {
        du[static_cast<size_t>(k)] += delta * wk;
        wk *= w[j];
      }
    }
    std::vector<cplx> u = m.coeffs();
    for (int k = 0; k <= J; ++k) u[static_cast<size_t>(k)] += du[static_cast<size_t>(k)] / static_cast<double>(M);
    const double r = m.conformal_radius() + dr.real() / M;
    if (!(r > 0.0)) break;
    m = ExteriorMap(r, u);
  }
  if (residual) *residual = best_res;
  return best;
}

namespace {

// Reorders a closed curve to start and end at its crossing with the positive
// real axis, with the argument tracked continuously from 0 to 2 pi.
struct CutCurve {
  std::vector<double> theta, arg;
  std::vector<cplx> z, tangent;
};

CutCurve cut_at_positive_axis(const BoundaryCurve& c) {
  const size_t n = c.samples.size();
  if (n < 3) fail(ErrorCode::InvalidParameter, "curve needs at least 3 samples");
  for (cplx z : c.samples)
    if (z == 0.0) fail(ErrorCode::BranchAmbiguity, "curve passes through the origin");
  size_t at = n;
  int up = 0, down = 0;
  for (size_t i = 0; i < n; ++i) {
    const cplx a = c.samples[i], b = c.samples[(i + 1) % n];
    const bool rising = a.imag() < 0.0 && b.imag() >= 0.0, falling = a.imag() >= 0.0 && b.imag() < 0.0;
    if (!rising && !falling) continue;
    const double lam = -a.imag() / (b.imag() - a.imag());
    if ((a + lam * (b - a)).real() <= 0.0) continue;
    if (rising) {
      ++up;
      at = i;
    } else {
      ++down;
    }
  }
  if (up != 1 || down != 0) fail(ErrorCode::BranchAmbiguity, "curve does not cross the cut exactly once");
  const size_t k = (at + 1) % n;
  const cplx a = c.samples[at], b = c.samples[k];
  const double lam = -a.imag() / (b.imag() - a.imag());
  const cplx p(a.real() + lam * (b.real() - a.real()), 0.0);
  double th_a = c.theta[at], th_b = c.theta[k];
  if (th_b < th_a) th_b += kTwoPi;
  const double th = th_a + lam * (th_b - th_a);
  const cplx tp = c.tangents.empty() ? b - a : c.tangents[at] + lam * (c.tangents[k] - c.tangents[at]);

  // A sample lying on the axis is the cut point itself.
  const bool on_axis = b.imag() == 0.0;
  CutCurve out;
  out.z.push_back(p);
  out.theta.push_back(th);
  out.tangent.push_back(tp);
  out.arg.push_back(0.0);
  for (size_t s = on_axis ? 1 : 0; s < n; ++s) {
    const size_t i = (k + s) % n;
    out.arg.push_back(out.arg.back() + std::arg(c.samples[i] / out.z.back()));
    out.z.push_back(c.samples[i]);
    out.theta.push_back(c.theta.empty() ? 0.0 : c.theta[i]);
    out.tangent.push_back(c.tangents.empty() ? 0.0 : c.tangents[i]);
  }
  out.arg.push_back(out.arg.back() + std::arg(p / out.z.back()));
  out.z.push_back(p);
  out.theta.push_back(th + kTwoPi);
  out.tangent.push_back(tp);
  if (std::abs(out.arg.back() - kTwoPi) > 1e-9)
    fail(ErrorCode::BranchAmbiguity, "curve does not wind once around the origin");
  out.arg.back() = kTwoPi;
  return out;
}

BoundaryCurve assemble(const CutCurve& cut, const std::vector<cplx>& Z, const std::vector<cplx>& T) {
  BoundaryCurve out;
  out.theta = cut.theta;
  out.samples = Z;
  out.tangents = T;
  out.normals.resize(T.size());
  for (size_t i = 0; i < T.size(); ++i) out.normals[i] = std::abs(T[i]) > 0.0 ? -kI * T[i] / std::abs(T[i]) : 0.0;
  return out;
}

}  // namespace

BoundaryCurve map_to_cone(const BoundaryCurve& c, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::InvalidParameter, "cone exponent must be positive");
  const CutCurve cut = cut_at_positive_axis(c);
  std::vector<cplx> Z(cut.z.size()), T(cut.z.size());
  for (size_t i = 0; i < Z.size(); ++i) {
    const double rho = std::abs(cut.z[i]);
    Z[i] = std::polar(std::pow(rho, alpha), alpha * cut.arg[i]);
    T[i] = alpha * std::polar(std::pow(rho, alpha - 1.0), (alpha - 1.0) * cut.arg[i]) * cut.tangent[i];
  }
  return assemble(cut, Z, T);
}

BoundaryCurve map_to_cylinder(const BoundaryCurve& c, double R, double r0) {
  if (!(R > 0.0) || !(r0 > 0.0)) fail(ErrorCode::InvalidParameter, "cylinder needs R > 0 and r0 > 0");
  const CutCurve cut = cut_at_positive_axis(c);
  std::vector<cplx> Z(cut.z.size()), T(cut.z.size());
  for (size_t i = 0; i < Z.size(); ++i) {
    Z[i] = R * cplx(std::log(std::abs(cut.z[i]) / r0), cut.arg[i]);
    T[i] = R * cut.tangent[i] / cut.z[i];
  }
  if (std::abs(Z.front().real() - Z.back().real()) > 1e-8)
    fail(ErrorCode::BranchAmbiguity, "strip endpoints have different real parts");
  return assemble(cut, Z, T);
}

}  // namespace dtoda
