#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"

namespace dtoda {

struct MomentVector {
  double t0 = 0.0;
  std::vector<cplx> t;  // t[k-1] = t_k
  int order() const { return static_cast<int>(t.size()); }
  cplx tk(int k) const { return k >= 1 && k <= order() ? t[static_cast<size_t>(k - 1)] : cplx(0.0); }
  bool on_t0_line(double tol = 0.0) const;
  MomentVector padded(int N) const;
};

struct DualMoments {
  double v0 = 0.0;
  std::vector<cplx> v;  // v[k-1] = v_k
  double u0 = 0.0;
  int order() const { return static_cast<int>(v.size()); }
  cplx vk(int k) const { return k >= 1 && k <= order() ? v[static_cast<size_t>(k - 1)] : cplx(0.0); }
};

// Per-sample boundary data at theta_m = 2 pi m / M.
struct ContourData {
  std::vector<cplx> z, z_theta;  // z(e^{i theta}) and dz/dtheta
  std::vector<double> x, s, U;   // |z|^2, x U'(x), U(x)
};

// Throws BoundaryOutsideAnnulus unless all samples lie in the annulus and the
// curve winds once around the origin.
ContourData contour_data(const ExteriorMap& m, const BackgroundDensity& d, int M);

// Single-pass trapezoid sums without convergence checks.
struct ContourMoments {
  MomentVector t;
  DualMoments v;
  double t0_imag = 0.0;
  double v0_imag = 0.0;
};
ContourMoments contour_moments(const ContourData& c, const BackgroundDensity& d, int Nt, int Nv);

// M is raised to max(256, 8N) when smaller. Results are from 2M samples after
// checking that M -> 2M changes nothing by more than 1e-9.
MomentVector forward_moments(const ExteriorMap& m, const BackgroundDensity& d, int N, int M = 256);
DualMoments dual_moments(const ExteriorMap& m, const BackgroundDensity& d, int N, int M = 256);

struct PotentialValue {
  double value = 0.0;
  bool interior = false;
  bool truncation_warning = false;
};

double potential_interior(const MomentVector& mv, const BackgroundDensity& d, cplx z, bool* warning = nullptr);
double potential_exterior(const DualMoments& dm, cplx z, bool* warning = nullptr);
PotentialValue potential_field(const ExteriorMap& m, const MomentVector& mv, const DualMoments& dm,
                               const BackgroundDensity& d, cplx z);

cplx cauchy_transform(const ExteriorMap& m, const BackgroundDensity& d, cplx z, int M = 1024);

// Integral of f over [r0^2, x]; Gauss-Legendre in log x, or in u with
// x' = x u^q when r0 = 0.
double radial_primitive(const BackgroundDensity& d, const std::function<double(double)>& f, double x, int n = 48);

// (1/pi) times the area integral of f(|z|^2) over the region between the
// inner circle and the boundary, reduced to a contour integral.
double polar_integral(const ExteriorMap& m, const BackgroundDensity& d, const std::function<double(double)>& f,
                      int M = 512, int n = 48);

// (1/pi) times the area integral of U sigma over the same region.
double energy_integral(const ExteriorMap& m, const BackgroundDensity& d, int M);
double energy_integral(const ContourData& c, const BackgroundDensity& d);

}  // namespace dtoda
