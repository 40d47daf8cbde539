#include "dtoda/identities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "dtoda/error.hpp"
#include "dtoda/io.hpp"
#include "dtoda/quadrature.hpp"
#include "dtoda/tau.hpp"

namespace dtoda {

using json = nlohmann::json;

json to_json(const IdentityReport& r) {
  return {{"name", r.name}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"passed", r.passed},
          {"configuration", r.configuration}};
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr double kSolveTol = 1e-12;

json options_json(const IdentityOptions& o) {
  return {{"tolerance", o.tolerance}, {"scheme", to_string(o.scheme)}, {"step_t0", o.step_t0},
          {"step_tk", o.step_tk},     {"axes", o.axes},                {"pad", o.pad},
          {"param_step", o.param_step}};
}

json base_config(const std::string& check, const MomentVector& base, const BackgroundDensity& d,
                 const IdentityOptions& o) {
  return {{"check", check},
          {"density", io::to_json(d)},
          {"base", io::to_json(base)},
          {"options", options_json(o)},
          {"version", io::kVersion}};
}

void describe(json& cfg, const TauEvaluator& ev) {
  json steps = json::array();
  for (int i = 0; i < ev.dimension(); ++i) steps.push_back(ev.axis_step(i));
  cfg["fd_steps"] = steps;
  cfg["axes"] = ev.axes();
  cfg["pad"] = ev.options().pad;
  cfg["solve_order"] = ev.solve_order();
  cfg["samples"] = ev.samples();
  cfg["node_solves"] = ev.solves();
}

IdentityReport finish(IdentityReport r, double budget, const IdentityOptions& o) {
  r.tolerance = o.tolerance > 0.0 ? o.tolerance : 10.0 * budget;
  r.configuration["error_budget"] = budget;
  r.passed = std::isfinite(r.residual) && r.residual <= r.tolerance;
  return r;
}

// Zero moments appended to every solve. The map of a domain with finitely
// many moments is an infinite series unless sigma is constant, so the
// default grows the padding until the trailing coefficients are negligible.
int resolve_pad(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& o) {
  if (o.pad > 0) return o.pad;
  const int N = std::max(1, base.order());
  const ExteriorMap* warm = nullptr;
  ExteriorMap m;
  for (int pad = 4; pad <= 24; pad += 4) {
    const int n = N + pad;
    m = solve_with_continuation(base.padded(n), d, n - 1, warm, std::max(512, 32 * n), kSolveTol);
    warm = &m;
    const auto& u = m.coeffs();
    const double tail = std::max(std::abs(u[u.size() - 1]), std::abs(u[u.size() - 2])) / m.conformal_radius();
    if (tail <= 1e-10) return pad;
  }
  return 24;
}

std::unique_ptr<TauEvaluator> make_evaluator(const MomentVector& base, const BackgroundDensity& d,
                                             const IdentityOptions& o, int axes) {
  DerivativeStencil st;
  st.base = base;
  st.step_t0 = o.step_t0;
  st.step_tk = o.step_tk;
  st.scheme = o.scheme;
  LatticeOptions lo;
  lo.axes = axes;
  lo.pad = resolve_pad(base, d, o);
  lo.solver_tol = kSolveTol;
  return std::make_unique<TauEvaluator>(d, st, lo);
}

// Axes needed for the D(z) series to converge at the given points: the
// tail falls off like (rho/|z|)^K with rho the largest boundary radius.
struct SeriesChoice {
  int axes = 1;
  double tail = 0.0;
  double rho = 0.0;
};

SeriesChoice choose_axes(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& o,
                         const std::vector<cplx>& points) {
  const int N = std::max(1, base.order());
  const int n = N + resolve_pad(base, d, o);
  const ExteriorMap m = solve_with_continuation(base.padded(n), d, n - 1, nullptr, std::max(512, 32 * n), kSolveTol);
  double rho = 0.0;
  for (cplx z : boundary_samples(m, 512)) rho = std::max(rho, std::abs(z));
  double zmin = INFINITY;
  for (cplx z : points) zmin = std::min(zmin, std::abs(z));
  if (!(zmin > rho)) fail(ErrorCode::PointInside, "point is not outside the boundary's bounding circle");
  const double q = rho / zmin;
  SeriesChoice s;
  s.rho = rho;
  if (o.axes > 0) {
    s.axes = o.axes;
  } else {
    // Solves beyond about 40 unknown coefficients lose conditioning.
    const int cap = std::max(N, 40 - n);
    s.axes = N;
    while (s.axes < cap && std::pow(q, s.axes) / s.axes > 1e-7) ++s.axes;
  }
  s.tail = std::pow(q, s.axes) / s.axes;
  return s;
}

void check_exterior(const ExteriorMap& m, cplx z, double min_gap) {
  const cplx w = invert_point(m, z);
  if (std::abs(w) <= 1.0 + min_gap) fail(ErrorCode::PointInside, "point is not in the domain exterior");
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
double rel(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// F at fixed moments for a (possibly modified) density.
double fixed_moment_F(const MomentVector& targets, const BackgroundDensity& d, const ExteriorMap& warm, int n, int M) {
  const ExteriorMap m = solve_with_continuation(targets, d, n - 1, &warm, M, kSolveTol);
  return tau_value(m, targets, d, n, M);
}

struct ParamDerivative {
  double value = 0.0;
  double error = 0.0;
  double step = 0.0;
};

// Richardson-extrapolated central difference in a density parameter at fixed moments.
ParamDerivative parameter_fd(const TauEvaluator& ev, Parameter p, double step) {
  const BackgroundDensity& d = ev.density();
  const double lam = d.parameter(p);
  const double h = step > 0.0 ? step : 1e-3 * std::max(1.0, std::abs(lam));
  const MomentVector& t = ev.base_moments();
  const int n = ev.solve_order(), M = ev.samples();
  auto F = [&](double l) { return fixed_moment_F(t, d.with_parameter(p, l), ev.base_map(), n, M); };
  const double D1 = (F(lam + h) - F(lam - h)) / (2 * h);
  const double D2 = (F(lam + h / 2) - F(lam - h / 2)) / h;
  ParamDerivative out;
  out.value = (4 * D2 - D1) / 3;
  out.error = std::abs(D2 - D1) / 3 + 1e-13 * std::max(1.0, std::abs(ev.base_value())) / h;
  out.step = h;
  return out;
}

// Area integral of dU/dlambda sigma plus the inner-circle correction.
double flambda_rhs(const ExteriorMap* m, const BackgroundDensity& d, Parameter p, double t0, int M) {
  auto f = [&](double x) { return d.potential_derivative(p, x) * d.sigma(x); };
  const double area = m ? polar_integral(*m, d, f, M, 64) : radial_primitive(d, f, d.radius_sq_for_t0(t0), 64);
  return -area - (t0 - d.inner_flux()) * d.u0_derivative(p);
}

// Closed-form parameter derivative of F on the t0-line.
double closed_parameter_derivative(const BackgroundDensity& d, Parameter p, double t0, double step) {
  const double t2 = t0 * t0, t3 = t2 * t0;
  switch (p) {
    case Parameter::R: return -t3 / (6 * d.R() * d.R());
    case Parameter::Beta: return t3 / 6;
    case Parameter::LogR0Sq: return t2 / 2;
    case Parameter::C:
      if (d.family() == Family::Homogeneous) {
        const double a = d.alpha(), c = d.c(), r0 = d.r0_sq();
        const double c0 = r0 > 0.0 ? c * c * std::pow(r0, 2 * a) / (4 * a * a * a) * (2 * a * std::log(r0) - 1.0) : 0.0;
        return (-t2 / (2 * a) - d.u0() * t0 + 2 * c0) / c;
      }
      break;
    default: break;
  }
  // Richardson on the closed form for the remaining parameters.
  const double lam = d.parameter(p);
  const double h = step > 0.0 ? step : 1e-3 * std::max(1.0, std::abs(lam));
  auto F = [&](double l) { return t0_line_closed(d.with_parameter(p, l), t0).F; };
  const double D1 = (F(lam + h) - F(lam - h)) / (2 * h);
  const double D2 = (F(lam + h / 2) - F(lam - h / 2)) / h;
  return (4 * D2 - D1) / 3;
}

// sum_k k t_k v_k and the cut-and-join double sum with v from the dual moments.
cplx weighted_sum(const MomentVector& t, const DualMoments& v) {
  cplx s = 0.0;
  for (int k = 1; k <= t.order(); ++k) s += static_cast<double>(k) * t.tk(k) * v.vk(k);
  return s;
}

cplx cut_join_sum(const MomentVector& t, const DualMoments& v) {
  cplx s = 0.0;
  const int N = t.order();
  for (int k = 1; k <= N; ++k)
    for (int l = 1; l <= N; ++l) {
      const double kk = k, ll = l;
      s += kk * ll * t.tk(k) * t.tk(l) * v.vk(k + l) + (kk + ll) * t.tk(k + l) * v.vk(k) * v.vk(l);
    }
  return 0.5 * s;
}

}  // namespace

IdentityReport check_gradient(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "gradient";
  r.configuration = base_config("gradient", base, d, opt);
  auto ev = make_evaluator(base, d, opt, opt.axes);
  const DualMoments& v = ev->base_dual();
  const DerivativeEstimate d0 = ev->derivative({Axis{Coord::T0, 0}});
  double res = std::abs(d0.value.real() - v.v0) / (1.0 + std::abs(v.v0));
  double budget = d0.error / (1.0 + std::abs(v.v0));
  json per_k = json::array();
  per_k.push_back({{"k", 0}, {"fd", d0.value.real()}, {"dual", v.v0}});
  for (int k = 1; k <= std::max(1, base.order()); ++k) {
    const DerivativeEstimate dk = ev->derivative({Axis{Coord::T, k}});
    const double rk = std::abs(dk.value - v.vk(k)) / (1.0 + std::abs(v.vk(k)));
    res = std::max(res, rk);
    budget = std::max(budget, dk.error / (1.0 + std::abs(v.vk(k))));
    per_k.push_back({{"k", k}, {"fd", io::to_json(dk.value)}, {"dual", io::to_json(v.vk(k))}});
  }
  r.residual = res;
  r.configuration["components"] = per_k;
  describe(r.configuration, *ev);
  return finish(r, budget + 1e-10, opt);
}

IdentityReport check_green_from_tau(const MomentVector& base, const BackgroundDensity& d, cplx z, cplx zeta,
                                    const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "green";
  r.configuration = base_config("green", base, d, opt);
  r.configuration["points"] = {io::to_json(z), io::to_json(zeta)};
  if (std::abs(z - zeta) == 0.0) fail(ErrorCode::CoincidentPoints, "z and zeta coincide");
  const SeriesChoice s = choose_axes(base, d, opt, {z, zeta});
  auto ev = make_evaluator(base, d, opt, s.axes);
  check_exterior(ev->base_map(), z, 0.0);
  check_exterior(ev->base_map(), zeta, 0.0);
  const DerivativeEstimate nn = ev->derivative({ev->nabla_direction(z), ev->nabla_direction(zeta)});
  const double from_tau = std::log(std::abs(1.0 / z - 1.0 / zeta)) + 0.5 * nn.value.real();
  const double exact = green(ev->base_map(), z, zeta);
  r.residual = std::abs(from_tau - exact);
  r.configuration["components"] = {{"green_tau", from_tau}, {"green_map", exact}, {"series_tail", s.tail}};
  r.configuration["truncation_warning"] = s.tail > 1e-6;
  describe(r.configuration, *ev);
  return finish(r, 0.5 * nn.error + s.tail + 1e-10, opt);
}

IdentityReport check_w_from_tau(const MomentVector& base, const BackgroundDensity& d, cplx z,
                                const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "w";
  r.configuration = base_config("w", base, d, opt);
  r.configuration["points"] = {io::to_json(z)};
  const SeriesChoice s = choose_axes(base, d, opt, {z});
  auto ev = make_evaluator(base, d, opt, s.axes);
  check_exterior(ev->base_map(), z, 0.0);
  const Eigen::VectorXcd e0 = ev->axis_direction({Coord::T0, 0});
  const DerivativeEstimate d00 = ev->derivative({e0, e0});
  const DerivativeEstimate d0D = ev->derivative({e0, ev->D_direction(z)});
  const cplx w_tau = z * std::exp(-0.5 * d00.value - d0D.value);
  const cplx w_map = invert_point(ev->base_map(), z);
  const double logp_tau = -0.5 * d00.value.real();
  const double logp_map = -std::log(ev->base_map().conformal_radius());
  const double rw = std::abs(w_tau - w_map) / std::abs(w_map);
  const double rp = std::abs(logp_tau - logp_map);
  r.residual = std::max(rw, rp);
  r.configuration["components"] = {{"w_tau", io::to_json(w_tau)},
                                   {"w_map", io::to_json(w_map)},
                                   {"w_residual", rw},
                                   {"log_p_tau", logp_tau},
                                   {"log_p_map", logp_map},
                                   {"log_p_residual", rp},
                                   {"series_tail", s.tail}};
  r.configuration["truncation_warning"] = s.tail > 1e-6;
  describe(r.configuration, *ev);
  return finish(r, 0.5 * d00.error + d0D.error + s.tail + 1e-10, opt);
}

IdentityReport check_hirota(const MomentVector& base, const BackgroundDensity& d, cplx z, cplx zeta,
                            const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "hirota";
  r.configuration = base_config("hirota", base, d, opt);
  r.configuration["points"] = {io::to_json(z), io::to_json(zeta)};
  if (std::abs(z - zeta) == 0.0) fail(ErrorCode::CoincidentPoints, "z and zeta coincide");
  const SeriesChoice s = choose_axes(base, d, opt, {z, zeta});
  auto ev = make_evaluator(base, d, opt, s.axes);
  check_exterior(ev->base_map(), z, 0.0);
  check_exterior(ev->base_map(), zeta, 0.0);
  const Eigen::VectorXcd e0 = ev->axis_direction({Coord::T0, 0});
  const Eigen::VectorXcd Dz = ev->D_direction(z), Dw = ev->D_direction(zeta);
  const Eigen::VectorXcd Bz = ev->Dbar_direction(z), Bw = ev->Dbar_direction(zeta);

  const DerivativeEstimate DD = ev->derivative({Dz, Dw});
  const DerivativeEstimate BB = ev->derivative({Bz, Bw});
  const DerivativeEstimate DB = ev->derivative({Dz, Bw});
  const DerivativeEstimate d0Dz = ev->derivative({e0, Dz}), d0Dw = ev->derivative({e0, Dw});
  const DerivativeEstimate d0Bz = ev->derivative({e0, Bz}), d0Bw = ev->derivative({e0, Bw});
  const DerivativeEstimate d00 = ev->derivative({e0, e0});

  const cplx zb = std::conj(z), wb = std::conj(zeta);
  const cplx L1 = (z - zeta) * std::exp(DD.value);
  const cplx R1 = z * std::exp(-d0Dz.value) - zeta * std::exp(-d0Dw.value);
  const cplx L2 = (zb - wb) * std::exp(BB.value);
  const cplx R2 = zb * std::exp(-d0Bz.value) - wb * std::exp(-d0Bw.value);
  const cplx L3 = 1.0 - std::exp(-DB.value);
  const cplx R3 = std::exp(d00.value + d0Dz.value + d0Bw.value) / (z * wb);
  const double e1 = rel(L1, R1), e2 = rel(L2, R2), e3 = rel(L3, R3);
  r.residual = std::max({e1, e2, e3});
  // Each relative residual moves by about the absolute error of the exponents.
  const double b1 = DD.error + d0Dz.error + d0Dw.error;
  const double b2 = BB.error + d0Bz.error + d0Bw.error;
  const double b3 = DB.error * std::abs(1.0 - L3) / std::max(std::abs(L3), 1e-300) + d00.error + d0Dz.error + d0Bw.error;
  r.configuration["components"] = {{"first", e1}, {"second", e2}, {"third", e3}, {"series_tail", s.tail}};
  r.configuration["truncation_warning"] = s.tail > 1e-6;
  describe(r.configuration, *ev);
  return finish(r, std::max({b1, b2, b3}) + 2 * s.tail + 1e-10, opt);
}

IdentityReport check_third_derivative(const MomentVector& base, const BackgroundDensity& d,
                                      const std::vector<cplx>& triple, const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "third_derivative";
  r.configuration = base_config("third_derivative", base, d, opt);
  // Third differences amplify node noise by h^-3, so the default steps are larger.
  IdentityOptions o = opt;
  if (o.step_t0 <= 0.0) o.step_t0 = 1e-2 * std::max(1.0, std::abs(base.t0));
  if (o.step_tk <= 0.0) o.step_tk = 1e-2;

  std::vector<cplx> pts = triple;
  if (pts.empty()) {
    const int n = std::max(1, base.order()) + resolve_pad(base, d, o);
    const ExteriorMap m0 = solve_with_continuation(base.padded(n), d, n - 1, nullptr, std::max(512, 32 * n), kSolveTol);
    double rho = 0.0;
    for (cplx z : boundary_samples(m0, 512)) rho = std::max(rho, std::abs(z));
    for (double a : {0.3, 2.4, 4.2}) pts.push_back(std::polar(2.5 * rho, a));
  }
  if (pts.size() != 3) fail(ErrorCode::InvalidParameter, "the third-derivative check takes exactly three points");
  r.configuration["points"] = {io::to_json(pts[0]), io::to_json(pts[1]), io::to_json(pts[2])};
  const SeriesChoice s = choose_axes(base, d, o, pts);
  auto ev = make_evaluator(base, d, o, s.axes);
  for (cplx z : pts) check_exterior(ev->base_map(), z, 0.0);
  const ExteriorMap& m = ev->base_map();

  // Boundary data on |w| = 1 at M >= 512 samples.
  const int M = std::max(512, ev->samples());
  std::vector<cplx> W(static_cast<size_t>(M));
  std::vector<double> weight(W.size());
  for (int j = 0; j < M; ++j) {
    const size_t k = static_cast<size_t>(j);
    W[k] = std::polar(1.0, 2.0 * std::numbers::pi * j / M);
    weight[k] = 1.0 / (std::norm(m.derivative(W[k])) * d.sigma(std::norm(m.eval(W[k]))));
  }
  std::vector<cplx> A;
  for (cplx z : pts) A.push_back(invert_point(m, z));
  auto poisson = [&](cplx a, cplx w) { return (1.0 - std::norm(a)) / std::norm(a - w); };

  double d000 = 0.0, triple_q = 0.0, pair_q = 0.0;
  for (size_t k = 0; k < W.size(); ++k) {
    d000 += weight[k];
    triple_q += poisson(A[0], W[k]) * poisson(A[1], W[k]) * poisson(A[2], W[k]) * weight[k];
    pair_q += poisson(A[0], W[k]) * poisson(A[1], W[k]) * weight[k];
  }
  d000 /= M;
  triple_q = -triple_q / M;
  pair_q = 0.5 * pair_q / M;

  const Eigen::VectorXcd e0 = ev->axis_direction({Coord::T0, 0});
  const DerivativeEstimate f000 = ev->derivative({e0, e0, e0});
  const DerivativeEstimate fnnn =
      ev->derivative({ev->nabla_direction(pts[0]), ev->nabla_direction(pts[1]), ev->nabla_direction(pts[2])});

  // Hadamard: t0-variation of the Green function at fixed t_k.
  const MomentVector& t = ev->base_moments();
  const double h = ev->axis_step(0);
  auto G = [&](double dt) {
    MomentVector tt = t;
    tt.t0 += dt;
    const ExteriorMap mm = solve_with_continuation(tt, d, ev->solve_order() - 1, &m, ev->samples(), kSolveTol);
    return green(mm, pts[0], pts[1]);
  };
  const double D1 = (G(h) - G(-h)) / (2 * h);
  const double D2 = (G(h / 2) - G(-h / 2)) / h;
  const double dG = (4 * D2 - D1) / 3;
  const double dG_err = std::abs(D2 - D1) / 3 + 1e-13 / h;

  const double e_000 = rel(f000.value.real(), d000);
  const double e_nnn = rel(fnnn.value.real(), triple_q);
  const double e_had = rel(dG, pair_q);
  r.residual = std::max({e_000, e_nnn, e_had});
  r.configuration["components"] = {{"d000_fd", f000.value.real()}, {"d000_boundary", d000},
                                   {"d000_residual", e_000},        {"triple_fd", fnnn.value.real()},
                                   {"triple_boundary", triple_q},   {"triple_residual", e_nnn},
                                   {"hadamard_fd", dG},             {"hadamard_boundary", pair_q},
                                   {"hadamard_residual", e_had},    {"boundary_samples", M}};
  describe(r.configuration, *ev);
  const double budget = std::max({f000.error / std::abs(d000), (fnnn.error + s.tail) / std::abs(triple_q),
                                  dG_err / std::abs(pair_q)});
  return finish(r, budget + 1e-10, opt);
}

IdentityReport check_parameter_derivative(const MomentVector& base, const BackgroundDensity& d, Parameter lambda,
                                          const IdentityOptions& opt) {
  IdentityReport r;
  r.name = std::string("parameter_") + to_string(lambda);
  r.configuration = base_config("parameter", base, d, opt);
  r.configuration["parameter"] = to_string(lambda);
  if (!d.has_parameter(lambda))
    fail(ErrorCode::InvalidParameter, std::string("density has no parameter ") + to_string(lambda));
  const bool cylinder = d.family() == Family::Cylinder;
  const double t0 = base.t0;
  json comp;

  if (base.on_t0_line()) {
    // Closed forms on the t0-line; no finite differences involved.
    const double lhs = closed_parameter_derivative(d, lambda, t0, opt.param_step);
    const double scale = std::max(1.0, std::abs(lhs));
    comp["derivative"] = lhs;
    double res = 0.0;
    if (lambda == Parameter::LogR0Sq) {
      const double v0 = t0_line_closed(d, t0).v0;
      const double a = d.R() * v0 - d.R() * t0 * std::log(d.r0_sq());
      const double b = t0 * t0 / 2;
      comp["inner_circle_form"] = a;
      comp["cut_join_first"] = b;
      res = std::max(std::abs(lhs - a), std::abs(lhs - b)) / scale;
    } else {
      const double a = flambda_rhs(nullptr, d, lambda, t0, 0);
      comp["area_form"] = a;
      res = std::abs(lhs - a) / scale;
      if (cylinder && lambda == Parameter::Beta) {
        comp["cut_join_second"] = t0 * t0 * t0 / 6;
        res = std::max(res, std::abs(lhs - t0 * t0 * t0 / 6) / scale);
      }
    }
    r.residual = res;
    r.configuration["mode"] = "closed_form";
    r.configuration["components"] = comp;
    return finish(r, 1e-11, opt);
  }

  auto ev = make_evaluator(base, d, opt, opt.axes);
  const ParamDerivative fd = parameter_fd(*ev, lambda, opt.param_step);
  const double scale = std::max(1.0, std::abs(fd.value));
  comp["derivative"] = fd.value;
  comp["param_step"] = fd.step;
  const MomentVector& t = ev->base_moments();
  const DualMoments& v = ev->base_dual();
  const cplx ktv = weighted_sum(t, v);
  double res = 0.0;
  if (lambda == Parameter::LogR0Sq) {
    const double a = d.R() * v.v0 - d.R() * t0 * std::log(d.r0_sq());
    const double b = t0 * t0 / 2 + ktv.real();
    comp["inner_circle_form"] = a;
    comp["cut_join_first"] = b;
    res = std::max(std::abs(fd.value - a), std::abs(fd.value - b)) / scale;
  } else {
    const double a = flambda_rhs(&ev->base_map(), d, lambda, t0, ev->samples());
    comp["area_form"] = a;
    res = std::abs(fd.value - a) / scale;
    if (cylinder && lambda == Parameter::Beta) {
      const cplx cj = cut_join_sum(t, v);
      const double b = t0 * t0 * t0 / 6 + t0 * ktv.real() + cj.real();
      comp["cut_join_second"] = b;
      res = std::max(res, std::abs(fd.value - b) / scale);
      // The explicit expression for 2F follows from the same sums.
      double lin = t0 * v.v0;
      for (int k = 1; k <= t.order(); ++k) lin += 2.0 * (t.tk(k) * v.vk(k)).real();
      const double beta = 1.0 / d.R();
      const double twoF = lin - beta * t0 * t0 * t0 / 6 - beta * t0 * ktv.real() - beta * cj.real();
      const double e = std::abs(2 * ev->base_value() - twoF) / std::max(1.0, std::abs(2 * ev->base_value()));
      comp["explicit_2F"] = twoF;
      comp["explicit_2F_residual"] = e;
      res = std::max(res, e);
    }
  }
  r.residual = res;
  r.configuration["mode"] = "finite_difference";
  r.configuration["components"] = comp;
  describe(r.configuration, *ev);
  return finish(r, fd.error / scale + 1e-9, opt);
}

IdentityReport check_homogeneity(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "homogeneity";
  r.configuration = base_config("homogeneity", base, d, opt);
  const Family fam = d.family();
  if (fam != Family::Homogeneous && fam != Family::Cylinder)
    fail(ErrorCode::UnsupportedFamily, "homogeneity relations need the homogeneous or cylinder family");
  const double t0 = base.t0;
  json comp;

  double Q = 0.0;
  if (fam == Family::Homogeneous) {
    const double a = d.alpha(), c = d.c(), r0 = d.r0_sq();
    const double c0 = r0 > 0.0 ? c * c * std::pow(r0, 2 * a) / (4 * a * a * a) * (2 * a * std::log(r0) - 1.0) : 0.0;
    Q = -t0 * t0 / (2 * a) - d.u0() * t0 + 2 * c0;
    comp["Q"] = Q;
  }

  if (base.on_t0_line()) {
    const T0LineValues cl = t0_line_closed(d, t0);
    const double scale = std::max(1.0, std::abs(2 * cl.F));
    double res = 0.0;
    if (fam == Family::Cylinder) {
      const double dR = closed_parameter_derivative(d, Parameter::R, t0, 0.0);
      res = std::abs(2 * cl.F - (d.R() * dR + t0 * cl.v0)) / scale;
      comp["cylinder"] = res;
    } else {
      const double cdc = d.c() * closed_parameter_derivative(d, Parameter::C, t0, 0.0);
      const double qh = std::abs(2 * cl.F - (t0 * cl.v0 + Q)) / scale;
      const double e4 = std::abs(2 * cl.F - (cdc + t0 * cl.v0)) / scale;
      const double e5 = std::abs(cdc - Q) / scale;
      comp["quasi_homogeneity"] = qh;
      comp["scaling_c"] = e4;
      comp["c_derivative"] = e5;
      res = std::max({qh, e4, e5});
    }
    r.residual = res;
    r.configuration["mode"] = "closed_form";
    r.configuration["components"] = comp;
    return finish(r, 1e-11, opt);
  }

  auto ev = make_evaluator(base, d, opt, opt.axes);
  const double F = ev->base_value();
  const double scale = std::max(1.0, std::abs(2 * F));
  const DerivativeEstimate d0 = ev->derivative({Axis{Coord::T0, 0}});
  double budget = std::abs(t0) * d0.error;
  // sum (t_k dF/dt_k + c.c.) with and without the (1 - k/2 alpha) weights, and sum k t_k dF/dt_k.
  double plain = 0.0, weighted = 0.0;
  cplx ksum = 0.0;
  for (int k = 1; k <= base.order(); ++k) {
    if (base.tk(k) == cplx(0.0)) continue;
    const DerivativeEstimate dk = ev->derivative({Axis{Coord::T, k}});
    const double term = 2.0 * (base.tk(k) * dk.value).real();
    plain += term;
    if (fam == Family::Homogeneous) weighted += (1.0 - k / (2.0 * d.alpha())) * term;
    ksum += static_cast<double>(k) * base.tk(k) * dk.value;
    budget += 2.0 * k * std::abs(base.tk(k)) * dk.error;
  }
  double res = 0.0;
  if (fam == Family::Cylinder) {
    const ParamDerivative dR = parameter_fd(*ev, Parameter::R, opt.param_step);
    const double rhs = d.R() * dR.value + t0 * d0.value.real() + plain;
    res = std::abs(2 * F - rhs) / scale;
    budget += d.R() * dR.error;
    comp["R_derivative"] = dR.value;
    comp["cylinder"] = res;
  } else {
    const ParamDerivative dc = parameter_fd(*ev, Parameter::C, opt.param_step);
    const double cdc = d.c() * dc.value;
    const double qh = std::abs(2 * F - (t0 * d0.value.real() + weighted + Q)) / scale;
    const double e4 = std::abs(2 * F - (cdc + t0 * d0.value.real() + plain)) / scale;
    const double e5 = std::abs(cdc - (-ksum.real() / d.alpha() + Q)) / scale;
    budget += d.c() * dc.error;
    comp["c_derivative_fd"] = cdc;
    comp["quasi_homogeneity"] = qh;
    comp["scaling_c"] = e4;
    comp["c_derivative"] = e5;
    res = std::max({qh, e4, e5});
  }
  r.residual = res;
  r.configuration["mode"] = "finite_difference";
  r.configuration["components"] = comp;
  describe(r.configuration, *ev);
  return finish(r, budget / scale + 1e-9, opt);
}

IdentityReport check_reality(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& opt) {
  IdentityReport r;
  r.name = "reality";
  r.configuration = base_config("reality", base, d, opt);
  if (d.family() != Family::Homogeneous)
    fail(ErrorCode::UnsupportedFamily, "the reality relation holds for the homogeneous family");
  const int n = std::max(1, base.order()) + resolve_pad(base, d, opt);
  const int M = std::max(1024, 32 * n);
  const ExteriorMap m = solve_with_continuation(base.padded(n), d, n - 1, nullptr, M, kSolveTol);
  const DualMoments v = dual_moments(m, d, n, M);
  const cplx s = weighted_sum(base, v);
  r.residual = std::abs(s.imag());
  r.configuration["components"] = {{"sum", io::to_json(s)}};
  r.configuration["samples"] = M;
  r.configuration["solve_order"] = n;
  IdentityOptions o = opt;
  if (o.tolerance <= 0.0) o.tolerance = 1e-9;
  return finish(r, 1e-10, o);
}

std::vector<double> kdv_coefficients(const BackgroundDensity& d) {
  if (d.family() != Family::Cylinder) fail(ErrorCode::UnsupportedFamily, "dKdV coefficients need the cylinder family");
  return {-d.R() * std::log(d.r0_sq()), d.R() / 2};
}

namespace {

// P(u) = sum_k k c_k u^(k-1) with c_1 the first entry, and P'(u).
void kdv_poly(const std::vector<double>& c, double u, double& P, double& dP) {
  P = 0.0;
  dP = 0.0;
  for (size_t i = c.size(); i-- > 0;) {
    const double k = static_cast<double>(i + 1);
    dP = dP * u + P;
    P = P * u + k * c[i];
  }
}

}  // namespace

double kdv_solve(const std::vector<double>& c, double t0) {
  size_t deg = c.size();
  while (deg > 0 && c[deg - 1] == 0.0) --deg;
  if (deg < 2) fail(ErrorCode::InvalidParameter, "need a nonzero coefficient beyond tau_1");
  // All real roots of P - t0 lie within the Cauchy bound.
  const double lead = deg * c[deg - 1];
  double bound = std::abs((c[0] - t0) / lead);
  for (size_t i = 1; i + 1 < deg; ++i) bound = std::max(bound, std::abs((i + 1) * c[i] / lead));
  bound += 1.0;
  const int grid = 4096;
  std::vector<std::pair<double, double>> brackets;
  double prev_u = -bound, P, dP;
  kdv_poly(c, prev_u, P, dP);
  double prev = P - t0;
  for (int i = 1; i <= grid; ++i) {
    const double u = -bound + 2.0 * bound * i / grid;
    kdv_poly(c, u, P, dP);
    const double cur = P - t0;
    // Only roots on increasing branches, where the potential is convex.
    if (prev < 0.0 && cur >= 0.0) brackets.emplace_back(prev_u, u);
    prev = cur;
    prev_u = u;
  }
  if (brackets.empty()) fail(ErrorCode::NoConvergence, "t0 is not attained by sum k tau_k u^(k-1)");
  if (brackets.size() > 1) fail(ErrorCode::NonMonotone, "several increasing branches reach t0");
  double lo = brackets[0].first, hi = brackets[0].second;
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    kdv_poly(c, u, P, dP);
    const double f = P - t0;
    if (f == 0.0) break;
    if (f < 0.0) lo = u;
    else hi = u;
    double next = dP != 0.0 ? u - f / dP : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-16 * std::max(1.0, std::abs(u))) {
      u = next;
      break;
    }
    u = next;
  }
  kdv_poly(c, u, P, dP);
  if (!(dP > 0.0)) fail(ErrorCode::NonMonotone, "sum k tau_k u^(k-1) is not increasing at the root");
  return u;
}

IdentityReport check_dkdv(const std::vector<double>& tau, double t0, int which_k, double tau1, double tolerance) {
  IdentityReport r;
  r.name = "dkdv_" + std::to_string(which_k);
  std::vector<double> c{tau1};
  c.insert(c.end(), tau.begin(), tau.end());
  if (which_k < 1 || which_k > static_cast<int>(c.size()))
    fail(ErrorCode::InvalidParameter, "which_k is outside the coefficient range");
  const double u = kdv_solve(c, t0);
  double P, dP;
  kdv_poly(c, u, P, dP);
  const double k = which_k;
  const double g = k * std::pow(u, k - 1.0);
  const double inv = 1.0 / dP;
  const double du_dt0 = inv;
  const double du_dtau = -g * inv;
  r.residual = std::abs(du_dtau + g * du_dt0);

  // Finite-difference cross-check of both derivatives by re-solving.
  const double h = 1e-4 * std::max(1.0, std::abs(t0));
  const double ht = 1e-4 * std::max(1.0, std::abs(c[static_cast<size_t>(which_k - 1)]));
  auto solve_tau = [&](double dt) {
    std::vector<double> cc = c;
    cc[static_cast<size_t>(which_k - 1)] += dt;
    return kdv_solve(cc, t0);
  };
  const double fd_t0 = (kdv_solve(c, t0 + h) - kdv_solve(c, t0 - h)) / (2 * h);
  const double fd_tau = (solve_tau(ht) - solve_tau(-ht)) / (2 * ht);
  const double fd_res = std::abs(fd_tau + g * fd_t0);
  const double fd_gap = std::max(std::abs(fd_t0 - du_dt0) / std::max(1.0, std::abs(du_dt0)),
                                 std::abs(fd_tau - du_dtau) / std::max(1.0, std::abs(du_dtau)));
  json coeffs = json::array();
  for (double x : c) coeffs.push_back(x);
  r.configuration = {{"check", "dkdv"},
                     {"coefficients", coeffs},
                     {"t0", t0},
                     {"k", which_k},
                     {"u", u},
                     {"du_dt0", du_dt0},
                     {"du_dtau", du_dtau},
                     {"fd_residual", fd_res},
                     {"fd_derivative_gap", fd_gap},
                     {"fd_steps", {h, ht}},
                     {"version", io::kVersion}};
  r.tolerance = tolerance;
  r.passed = r.residual <= tolerance;
  return r;
}

std::vector<std::string> suite_names() {
  return {"gradient", "green", "w", "hirota", "third", "parameter", "homogeneity", "reality", "dkdv"};
}

std::vector<IdentityReport> run_suite(const SuiteRequest& req, const BackgroundDensity& d) {
  std::vector<std::string> wanted = req.suites;
  const std::vector<std::string> known = suite_names();
  if (wanted.empty() || std::find(wanted.begin(), wanted.end(), "all") != wanted.end()) wanted = known;
  for (const auto& w : wanted)
    if (std::find(known.begin(), known.end(), w) == known.end())
      fail(ErrorCode::InvalidParameter, "unknown suite: " + w);
  auto want = [&](const char* s) { return std::find(wanted.begin(), wanted.end(), s) != wanted.end(); };

  const MomentVector& b = req.base;
  const IdentityOptions& o = req.options;
  std::vector<cplx> pts = req.points;
  if (pts.empty() && (want("green") || want("w") || want("hirota"))) {
    const double r = std::sqrt(d.radius_sq_for_t0(b.t0));
    pts = {std::polar(2.5 * r, 0.4), std::polar(3.0 * r, 2.2)};
  }
  const Family fam = d.family();
  std::vector<std::pair<std::string, std::function<IdentityReport()>>> jobs;
  if (want("gradient")) jobs.emplace_back("gradient", [&] { return check_gradient(b, d, o); });
  for (size_t i = 0; i < pts.size(); ++i) {
    const std::string tag = std::to_string(i);
    if (want("w")) jobs.emplace_back("w_" + tag, [&, i] { return check_w_from_tau(b, d, pts[i], o); });
    if (i + 1 < pts.size()) {
      if (want("green")) jobs.emplace_back("green_" + tag, [&, i] { return check_green_from_tau(b, d, pts[i], pts[i + 1], o); });
      if (want("hirota")) jobs.emplace_back("hirota_" + tag, [&, i] { return check_hirota(b, d, pts[i], pts[i + 1], o); });
    }
  }
  if (want("third")) jobs.emplace_back("third_derivative", [&] { return check_third_derivative(b, d, {}, o); });
  if (want("parameter")) {
    std::vector<Parameter> ps;
    if (fam == Family::Homogeneous) ps = {Parameter::C, Parameter::Alpha};
    if (fam == Family::Cylinder) ps = {Parameter::Beta, Parameter::LogR0Sq};
    if (fam == Family::General) ps = {Parameter::C1, Parameter::C0};
    for (Parameter p : ps)
      jobs.emplace_back(std::string("parameter_") + to_string(p),
                        [&, p] { return check_parameter_derivative(b, d, p, o); });
  }
  if (want("homogeneity") && (fam == Family::Homogeneous || fam == Family::Cylinder))
    jobs.emplace_back("homogeneity", [&] { return check_homogeneity(b, d, o); });
  if (want("reality") && fam == Family::Homogeneous)
    jobs.emplace_back("reality", [&] { return check_reality(b, d, o); });
  if (want("dkdv") && fam == Family::Cylinder) {
    const std::vector<double> c = kdv_coefficients(d);
    jobs.emplace_back("dkdv_2", [&, c] { return check_dkdv({c[1]}, b.t0, 2, c[0]); });
  }

  std::vector<IdentityReport> out(jobs.size());
  const long long n = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    try {
      out[k] = jobs[k].second();
      out[k].name = jobs[k].first;
    } catch (const Error& e) {
      IdentityReport r;
      r.name = jobs[k].first;
      r.residual = kNaN;
      r.tolerance = 0.0;
      r.passed = false;
      r.configuration = base_config(jobs[k].first, b, d, o);
      r.configuration["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
      out[k] = r;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& c) { return a.name < c.name; });
  return out;
}

}  // namespace dtoda
