#pragma once

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/moments.hpp"

namespace dtoda {

enum class TauMethod { DoubleIntegral, MomentIdentity, ClosedForm };
const char* to_string(TauMethod m);

struct TauSample {
  double value = 0.0;
  TauMethod method = TauMethod::ClosedForm;
  MomentVector moments;
  double estimated_error = 0.0;
};

// F, F' = v0 and F'' = log r^2 on the t0-line, in closed form.
struct T0LineValues {
  double F = 0.0;
  double v0 = 0.0;
  double log_r_sq = 0.0;
};
T0LineValues t0_line_closed(const BackgroundDensity& d, double t0);

TauSample tau_t0_closed(const BackgroundDensity& d, double t0);

// 2F = -I + t0 v0 + sum (t_k v_k + c.c.) - u0 t0 + u0 r0^2 U'(r0^2), with I the
// area integral of U sigma reduced to a boundary integral.
double tau_moment_identity(const MomentVector& mv, const DualMoments& dm, const BackgroundDensity& d, double energy);
TauSample tau_via_moments(const MomentVector& mv, const DualMoments& dm, const BackgroundDensity& d,
                          const ExteriorMap& m, int M = 0);

// Logarithmic energy of sigma over the domain part of the annulus. Concentric
// circles reduce to a nested radial integral; other domains integrate the
// potential of the domain over a polar grid (star-shaped domains only).
TauSample tau_double_integral(const ExteriorMap& m, const BackgroundDensity& d, double tol = 1e-10);

// Coulomb potential of the domain at an interior point, from a boundary
// integral with M samples.
double interior_potential(const ContourData& c, const BackgroundDensity& d, cplx z, size_t stride = 1);

}  // namespace dtoda
