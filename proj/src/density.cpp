#include "dtoda/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_interp.h>

#include "dtoda/error.hpp"
#include "dtoda/quadrature.hpp"

namespace dtoda {

// Natural cubic spline in x; evaluation passes no accelerator, which keeps it
// read-only and safe under concurrent use.
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    interp_ = gsl_interp_alloc(gsl_interp_cspline, x_.size());
    gsl_interp_init(interp_, x_.data(), y_.data(), x_.size());
  }
  ~NaturalSpline() { gsl_interp_free(interp_); }
  NaturalSpline(const NaturalSpline&) = delete;
  NaturalSpline& operator=(const NaturalSpline&) = delete;

  double eval(double x) const { return gsl_interp_eval(interp_, x_.data(), y_.data(), clamp(x), nullptr); }
  double deriv(double x) const {
    return gsl_interp_eval_deriv(interp_, x_.data(), y_.data(), clamp(x), nullptr);
  }
  double deriv2(double x) const {
    return gsl_interp_eval_deriv2(interp_, x_.data(), y_.data(), clamp(x), nullptr);
  }
  const std::vector<double>& knots() const { return x_; }

 private:
  double clamp(double x) const { return std::min(std::max(x, x_.front()), x_.back()); }
  std::vector<double> x_, y_;
  gsl_interp* interp_ = nullptr;
};

namespace {

constexpr double kSlack = 1e-12;

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

struct GslQuiet {
  GslQuiet() { gsl_set_error_handler_off(); }
};
const GslQuiet gsl_quiet;

}  // namespace

bool Annulus::contains(double x) const {
  return x >= r0_sq * (1.0 - kSlack) && x <= r1_sq * (1.0 + kSlack);
}

const char* to_string(Family f) {
  switch (f) {
    case Family::Homogeneous: return "homogeneous";
    case Family::Cylinder: return "cylinder";
    case Family::General: return "general";
    case Family::Tabulated: return "tabulated";
  }
  return "unknown";
}

const char* to_string(Parameter p) {
  switch (p) {
    case Parameter::C: return "c";
    case Parameter::Alpha: return "alpha";
    case Parameter::R: return "R";
    case Parameter::Beta: return "beta";
    case Parameter::LogR0Sq: return "log_r0_sq";
    case Parameter::C1: return "C1";
    case Parameter::C0: return "C0";
  }
  return "unknown";
}

Parameter parameter_from_string(const std::string& name) {
  for (Parameter p : {Parameter::C, Parameter::Alpha, Parameter::R, Parameter::Beta, Parameter::LogR0Sq,
                      Parameter::C1, Parameter::C0})
    if (name == to_string(p)) return p;
  fail(ErrorCode::InvalidParameter, "unknown parameter '" + name + "'");
}

BackgroundDensity BackgroundDensity::homogeneous(double c, double alpha, double r0_sq, double r1_sq) {
  BackgroundDensity d;
  d.family_ = Family::Homogeneous;
  d.p_[0] = c;
  d.p_[1] = alpha;
  d.annulus_ = {r0_sq, r1_sq};
  d.validate();
  return d;
}

BackgroundDensity BackgroundDensity::cylinder(double R, double r0_sq, double r1_sq) {
  BackgroundDensity d;
  d.family_ = Family::Cylinder;
  d.p_[0] = R;
  d.annulus_ = {r0_sq, r1_sq};
  d.validate();
  return d;
}

BackgroundDensity BackgroundDensity::general(double C1, double C0, double k, double r0_sq, double r1_sq) {
  BackgroundDensity d;
  d.family_ = Family::General;
  d.p_[0] = C1;
  d.p_[1] = C0;
  d.p_[2] = k;
  d.annulus_ = {r0_sq, r1_sq};
  d.validate();
  return d;
}

BackgroundDensity BackgroundDensity::tabulated(std::vector<double> U, double r0_sq, double r1_sq) {
  require(U.size() >= 4, ErrorCode::InvalidParameter, "tabulated potential needs at least 4 samples");
  require(r0_sq > 0.0 && r1_sq > r0_sq, ErrorCode::InvalidParameter, "tabulated density needs 0 < r0_sq < r1_sq");
  BackgroundDensity d;
  d.family_ = Family::Tabulated;
  d.annulus_ = {r0_sq, r1_sq};
  const size_t n = U.size();
  std::vector<double> x(n);
  const double span = std::log(r1_sq / r0_sq);
  for (size_t i = 0; i < n; ++i) x[i] = r0_sq * std::exp(span * static_cast<double>(i) / static_cast<double>(n - 1));
  x.front() = r0_sq;
  x.back() = r1_sq;
  d.table_ = U;
  d.spline_ = std::make_shared<const NaturalSpline>(x, std::move(U));
  d.validate();
  // Cumulative integral of U sigma at the knots; the integrand is a
  // polynomial of degree 6 on each interval, so 4 nodes are exact.
  d.energy_knots_.assign(n, 0.0);
  for (size_t i = 1; i < n; ++i) {
    const double seg = integrate_gl([&](double s) { return d.potential_raw(s) * d.sigma_raw(s); }, x[i - 1], x[i], 4);
    d.energy_knots_[i] = d.energy_knots_[i - 1] + seg;
  }
  return d;
}

void BackgroundDensity::validate() {
  const double r0 = annulus_.r0_sq, r1 = annulus_.r1_sq;
  require(std::isfinite(r0) && std::isfinite(r1) && r0 >= 0.0 && r1 > r0, ErrorCode::InvalidParameter,
          "annulus requires 0 <= r0_sq < r1_sq");
  switch (family_) {
    case Family::Homogeneous:
      require(c() > 0.0, ErrorCode::InvalidParameter, "homogeneous family requires c > 0");
      require(alpha() != 0.0, ErrorCode::InvalidParameter, "homogeneous family requires alpha != 0");
      require(alpha() > 0.0 || r0 > 0.0, ErrorCode::InvalidParameter, "alpha < 0 requires r0_sq > 0");
      break;
    case Family::Cylinder:
      require(R() > 0.0, ErrorCode::InvalidParameter, "cylinder family requires R > 0");
      require(r0 > 0.0, ErrorCode::InvalidParameter, "cylinder family requires r0_sq > 0");
      break;
    case Family::General: {
      require(k() > 2.0, ErrorCode::InvalidParameter, "general family requires k > 2");
      require(r0 > 0.0, ErrorCode::InvalidParameter, "general family requires r0_sq > 0");
      require(C1() != 0.0, ErrorCode::InvalidParameter, "general family requires C1 != 0");
      const double L0 = C1() * std::log(r0) + C0();
      const double L1 = C1() * std::log(r1) + C0();
      // L may vanish at r0 only when sigma stays bounded there (k <= 3).
      const bool edge_ok = k() <= 3.0 ? L0 >= -1e-14 * std::abs(C0()) : L0 > 0.0;
      require(edge_ok && L1 > 0.0, ErrorCode::InvalidParameter,
              "general family requires C1 log x + C0 > 0 on the annulus");
      break;
    }
    case Family::Tabulated:
      break;
  }
  // Positivity of sigma on a grid uniform in log x (or in x when r0 = 0).
  const int n = 200;
  for (int i = 0; i <= n; ++i) {
    const double f = static_cast<double>(i) / n;
    double x = r0 > 0.0 ? r0 * std::pow(r1 / r0, f) : r1 * std::max(f, 1e-6);
    if (family_ == Family::General && k() <= 3.0 && i == 0) continue;
    const double s = sigma_raw(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
      std::ostringstream os;
      os << "sigma(" << x << ") = " << s << " is not positive";
      fail(ErrorCode::NonPositiveDensity, os.str());
    }
  }
}

void BackgroundDensity::check_domain(double x) const {
  if (!annulus_.contains(x)) {
    std::ostringstream os;
    os.precision(17);
    os << "x = " << x << " outside [" << annulus_.r0_sq << ", " << annulus_.r1_sq << "]";
    fail(ErrorCode::OutOfAnnulus, os.str());
  }
}

double BackgroundDensity::potential_raw(double x) const {
  switch (family_) {
    case Family::Homogeneous: return c() / (alpha() * alpha()) * std::pow(x, alpha());
    case Family::Cylinder: {
      const double L = std::log(x / annulus_.r0_sq);
      return 0.5 * R() * L * L;
    }
    case Family::General: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      return std::pow(std::max(C1() * std::log(x) + C0(), 0.0), nu);
    }
    case Family::Tabulated: return spline_->eval(x);
  }
  return 0.0;
}

double BackgroundDensity::slope_raw(double x) const {
  switch (family_) {
    case Family::Homogeneous: return c() / alpha() * std::pow(x, alpha() - 1.0);
    case Family::Cylinder: return R() * std::log(x / annulus_.r0_sq) / x;
    case Family::General: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      return C1() * nu * std::pow(std::max(C1() * std::log(x) + C0(), 0.0), nu - 1.0) / x;
    }
    case Family::Tabulated: return spline_->deriv(x);
  }
  return 0.0;
}

double BackgroundDensity::flux_raw(double x) const {
  switch (family_) {
    case Family::Homogeneous: return c() / alpha() * std::pow(x, alpha());
    case Family::Cylinder: return R() * std::log(x / annulus_.r0_sq);
    case Family::General: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      return C1() * nu * std::pow(std::max(C1() * std::log(x) + C0(), 0.0), nu - 1.0);
    }
    case Family::Tabulated: return x * spline_->deriv(x);
  }
  return 0.0;
}

double BackgroundDensity::sigma_raw(double x) const {
  switch (family_) {
    case Family::Homogeneous: return c() * std::pow(x, alpha() - 1.0);
    case Family::Cylinder: return R() / x;
    case Family::General: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      const double L = std::max(C1() * std::log(x) + C0(), 0.0);
      return C1() * C1() * nu * (nu - 1.0) * std::pow(L, nu - 2.0) / x;
    }
    case Family::Tabulated: return spline_->deriv(x) + x * spline_->deriv2(x);
  }
  return 0.0;
}

double BackgroundDensity::potential(double x) const {
  check_domain(x);
  return potential_raw(x);
}

double BackgroundDensity::slope(double x) const {
  check_domain(x);
  return slope_raw(x);
}

double BackgroundDensity::flux(double x) const {
  check_domain(x);
  return flux_raw(x);
}

double BackgroundDensity::sigma(double x) const {
  check_domain(x);
  const double s = sigma_raw(x);
  if (!(s > 0.0)) fail(ErrorCode::NonPositiveDensity, "sigma is not positive");
  return s;
}

double BackgroundDensity::inner_flux() const {
  if (annulus_.r0_sq == 0.0) return 0.0;
  return flux_raw(annulus_.r0_sq);
}

double BackgroundDensity::u0() const {
  const double r0 = annulus_.r0_sq;
  if (r0 == 0.0) return 0.0;
  return std::log(r0) * flux_raw(r0) - potential_raw(r0);
}

double BackgroundDensity::energy_primitive(double x) const {
  check_domain(x);
  const double x0 = annulus_.r0_sq;
  switch (family_) {
    case Family::Homogeneous: {
      const double s = flux_raw(x), s0 = x0 > 0.0 ? flux_raw(x0) : 0.0;
      return (s * s - s0 * s0) / (2.0 * alpha());
    }
    case Family::Cylinder: {
      const double s = flux_raw(x);
      return s * s * s / (6.0 * R());
    }
    case Family::General: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      const double K = std::pow(C1() * nu, 1.0 - k());
      return K * (std::pow(flux_raw(x), k()) - std::pow(flux_raw(x0), k())) / k();
    }
    case Family::Tabulated: {
      const auto& knots = spline_->knots();
      size_t i = static_cast<size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin());
      i = std::min(std::max<size_t>(i, 1), knots.size() - 1);
      const double a = knots[i - 1];
      const double b = std::min(std::max(x, a), knots.back());
      return energy_knots_[i - 1] +
             integrate_gl([&](double s) { return potential_raw(s) * sigma_raw(s); }, a, b, 4);
    }
  }
  return 0.0;
}

double BackgroundDensity::t0_min() const { return annulus_.r0_sq > 0.0 ? flux_raw(annulus_.r0_sq) : 0.0; }
double BackgroundDensity::t0_max() const { return flux_raw(annulus_.r1_sq); }

bool BackgroundDensity::admissible(double t0) const { return t0 >= t0_min() && t0 <= t0_max(); }

double BackgroundDensity::radius_sq_for_t0(double t0) const {
  if (!admissible(t0)) {
    std::ostringstream os;
    os.precision(17);
    os << "t0 = " << t0 << " outside admissible interval [" << t0_min() << ", " << t0_max() << "]";
    fail(ErrorCode::OutOfAdmissibleInterval, os.str());
  }
  // Closed forms where available; bisection otherwise.
  switch (family_) {
    case Family::Homogeneous: return std::pow(alpha() * t0 / c(), 1.0 / alpha());
    case Family::Cylinder: return annulus_.r0_sq * std::exp(t0 / R());
    default: break;
  }
  double lo = std::max(annulus_.r0_sq, 0.0), hi = annulus_.r1_sq;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (flux_raw(mid) < t0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool BackgroundDensity::has_parameter(Parameter p) const {
  switch (family_) {
    case Family::Homogeneous: return p == Parameter::C || p == Parameter::Alpha;
    case Family::Cylinder: return p == Parameter::R || p == Parameter::Beta || p == Parameter::LogR0Sq;
    case Family::General: return p == Parameter::C1 || p == Parameter::C0;
    case Family::Tabulated: return false;
  }
  return false;
}

double BackgroundDensity::parameter(Parameter p) const {
  if (!has_parameter(p))
    fail(ErrorCode::UnsupportedFamily, std::string("parameter ") + to_string(p) + " not defined for " + to_string(family_));
  switch (p) {
    case Parameter::C: return c();
    case Parameter::Alpha: return alpha();
    case Parameter::R: return R();
    case Parameter::Beta: return 1.0 / R();
    case Parameter::LogR0Sq: return std::log(annulus_.r0_sq);
    case Parameter::C1: return C1();
    case Parameter::C0: return C0();
  }
  return 0.0;
}

BackgroundDensity BackgroundDensity::with_parameter(Parameter p, double value) const {
  parameter(p);
  switch (p) {
    case Parameter::C: return homogeneous(value, alpha(), r0_sq(), r1_sq());
    case Parameter::Alpha: return homogeneous(c(), value, r0_sq(), r1_sq());
    case Parameter::R: return cylinder(value, r0_sq(), r1_sq());
    case Parameter::Beta: return cylinder(1.0 / value, r0_sq(), r1_sq());
    case Parameter::LogR0Sq: return cylinder(R(), std::exp(value), r1_sq());
    case Parameter::C1: return general(value, C0(), k(), r0_sq(), r1_sq());
    case Parameter::C0: return general(C1(), value, k(), r0_sq(), r1_sq());
  }
  return *this;
}

double BackgroundDensity::potential_derivative(Parameter p, double x) const {
  parameter(p);
  switch (p) {
    case Parameter::C: return std::pow(x, alpha()) / (alpha() * alpha());
    case Parameter::Alpha: {
      if (x == 0.0) return 0.0;
      const double a = alpha();
      return c() * std::pow(x, a) * (std::log(x) / (a * a) - 2.0 / (a * a * a));
    }
    case Parameter::R: {
      const double L = std::log(x / r0_sq());
      return 0.5 * L * L;
    }
    case Parameter::Beta: {
      const double L = std::log(x / r0_sq());
      return -0.5 * R() * R() * L * L;
    }
    case Parameter::LogR0Sq: return -R() * std::log(x / r0_sq());
    case Parameter::C1: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      return nu * std::pow(C1() * std::log(x) + C0(), nu - 1.0) * std::log(x);
    }
    case Parameter::C0: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      return nu * std::pow(C1() * std::log(x) + C0(), nu - 1.0);
    }
  }
  return 0.0;
}

double BackgroundDensity::slope_derivative(Parameter p, double x) const {
  parameter(p);
  switch (p) {
    case Parameter::C: return std::pow(x, alpha() - 1.0) / alpha();
    case Parameter::Alpha: {
      if (x == 0.0) return 0.0;
      const double a = alpha();
      return c() * std::pow(x, a - 1.0) * (std::log(x) / a - 1.0 / (a * a));
    }
    case Parameter::R: return std::log(x / r0_sq()) / x;
    case Parameter::Beta: return -R() * R() * std::log(x / r0_sq()) / x;
    case Parameter::LogR0Sq: return -R() / x;
    case Parameter::C1: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      const double L = C1() * std::log(x) + C0();
      return nu * std::pow(L, nu - 1.0) / x + C1() * nu * (nu - 1.0) * std::pow(L, nu - 2.0) * std::log(x) / x;
    }
    case Parameter::C0: {
      const double nu = (k() - 1.0) / (k() - 2.0);
      const double L = C1() * std::log(x) + C0();
      return C1() * nu * (nu - 1.0) * std::pow(L, nu - 2.0) / x;
    }
  }
  return 0.0;
}

double BackgroundDensity::u0_derivative(Parameter p) const {
  const double r0 = r0_sq();
  if (r0 == 0.0) return 0.0;
  return r0 * std::log(r0) * slope_derivative(p, r0) - potential_derivative(p, r0);
}

}  // namespace dtoda
