#pragma once

#include <memory>
#include <string>
#include <vector>

namespace dtoda {

struct Annulus {
  double r0_sq = 0.0;
  double r1_sq = 0.0;
  bool contains(double x) const;
};

enum class Family { Homogeneous, Cylinder, General, Tabulated };

// Parameters a family potential may depend on. Beta is 1/R and LogR0Sq
// moves the inner circle of the annulus.
enum class Parameter { C, Alpha, R, Beta, LogR0Sq, C1, C0 };

const char* to_string(Family f);
const char* to_string(Parameter p);
Parameter parameter_from_string(const std::string& name);

class NaturalSpline;

// Radial background: U(x), x = |z|^2, with density sigma = (x U')'.
class BackgroundDensity {
 public:
  // U = c/alpha^2 x^alpha. r0_sq = 0 is allowed when alpha > 0.
  static BackgroundDensity homogeneous(double c, double alpha, double r0_sq, double r1_sq);
  // U = R/2 log^2(x/r0^2).
  static BackgroundDensity cylinder(double R, double r0_sq, double r1_sq);
  // U = (C1 log x + C0)^nu with nu = (k-1)/(k-2).
  static BackgroundDensity general(double C1, double C0, double k, double r0_sq, double r1_sq);
  // U sampled on a grid uniform in log x from r0_sq to r1_sq.
  static BackgroundDensity tabulated(std::vector<double> U, double r0_sq, double r1_sq);

  Family family() const { return family_; }
  const Annulus& annulus() const { return annulus_; }
  double r0_sq() const { return annulus_.r0_sq; }
  double r1_sq() const { return annulus_.r1_sq; }

  // Family constants; zero where not applicable.
  double c() const { return p_[0]; }
  double alpha() const { return p_[1]; }
  double R() const { return p_[0]; }
  double C1() const { return p_[0]; }
  double C0() const { return p_[1]; }
  double k() const { return p_[2]; }
  const std::vector<double>& table() const { return table_; }

  double potential(double x) const;  // U
  double slope(double x) const;      // U'
  double flux(double x) const;       // x U'
  double sigma(double x) const;

  // u0 = r0^2 log r0^2 U'(r0^2) - U(r0^2)
  double u0() const;
  // r0^2 U'(r0^2), the flux through the inner circle.
  double inner_flux() const;
  // Integral of U sigma over [r0^2, x].
  double energy_primitive(double x) const;

  // Admissible t0 range: image of the annulus under x U'(x).
  double t0_min() const;
  double t0_max() const;
  bool admissible(double t0) const;
  // Solves x U'(x) = t0 for x by bisection.
  double radius_sq_for_t0(double t0) const;

  bool has_parameter(Parameter p) const;
  double parameter(Parameter p) const;
  BackgroundDensity with_parameter(Parameter p, double value) const;
  // Derivatives of U and U' in a parameter at fixed x.
  double potential_derivative(Parameter p, double x) const;
  double slope_derivative(Parameter p, double x) const;
  double u0_derivative(Parameter p) const;

 private:
  BackgroundDensity() = default;
  void validate();
  void check_domain(double x) const;
  double potential_raw(double x) const;
  double slope_raw(double x) const;
  double sigma_raw(double x) const;
  double flux_raw(double x) const;

  Family family_ = Family::Homogeneous;
  Annulus annulus_;
  double p_[3] = {0.0, 0.0, 0.0};
  std::vector<double> table_;
  std::shared_ptr<const NaturalSpline> spline_;
  std::vector<double> energy_knots_;
};

}  // namespace dtoda
