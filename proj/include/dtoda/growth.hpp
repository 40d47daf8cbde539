#pragma once

#include <vector>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/moments.hpp"

namespace dtoda {

struct GrowthState {
  ExteriorMap map;
  double t0 = 0.0;
  MomentVector conserved;  // t_k at the start of the trajectory
  int step_index = 0;
};

enum class GrowthMethod { MomentDriven, FrontTracking };
const char* to_string(GrowthMethod m);

struct Trajectory {
  std::vector<GrowthState> states;
  GrowthMethod method = GrowthMethod::MomentDriven;
  // drift_report[n][k-1] = |t_k(step n) - t_k(0)|
  std::vector<std::vector<double>> drift_report;
  int substeps = 0;  // total substeps taken, including CFL splits
  double max_drift() const;
};

// Start state with the conserved moments t_1..t_N of the map (N = 0 uses J+1).
GrowthState growth_state(const ExteriorMap& m, const BackgroundDensity& d, int N = 0);

Trajectory grow_moment_driven(const GrowthState& s0, const BackgroundDensity& d, double dt0, int steps);

struct FrontTrackingOptions {
  int refit_J = 16;
  bool heun = false;
  int markers = 0;         // 0 picks a power of two from refit_J
  double fit_tol = 1e-6;   // relative to the curve diameter
  double cfl = 0.1;
};

// Markers move along the outward normal with V = |w'(z)| / (2 sigma); the map
// is refitted to the markers after every substep.
Trajectory grow_front_tracking(const ExteriorMap& m0, const BackgroundDensity& d, double dt, int steps,
                               const FrontTrackingOptions& opt = {});
Trajectory grow_front_tracking(const BoundaryCurve& c0, const BackgroundDensity& d, double dt, int steps,
                               const FrontTrackingOptions& opt = {});

// Map of truncation J whose boundary passes through the closed curve given by
// samples at equally spaced parameters. Returns the max normal residual.
ExteriorMap fit_map(const std::vector<cplx>& curve, int J, const ExteriorMap* guess, double* residual = nullptr);

// Z = z^alpha and Z = R log(z / r0), cut where the curve crosses the positive
// real axis. The output runs from arg 0 to arg 2 pi and repeats the cut point.
BoundaryCurve map_to_cone(const BoundaryCurve& c, double alpha);
BoundaryCurve map_to_cylinder(const BoundaryCurve& c, double R, double r0);

}  // namespace dtoda
