#pragma once

#include <optional>

#include <Eigen/Dense>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/moments.hpp"

namespace dtoda {

struct InverseProblem {
  MomentVector targets;
  BackgroundDensity density;
  ExteriorMap initial;
  int max_iter = 50;
  double tol = 1e-12;
  int samples = 0;  // contour samples; 0 picks a power of two from the order
};

struct InverseSolution {
  ExteriorMap map;
  double residual_norm = 0.0;
  int iterations = 0;
  double jacobian_condition = 0.0;
};

// Newton on (r, u_0..u_{n-1}) against (t0, t_1..t_n), n = max(N, J+1).
// Targets beyond N are held at zero, so the system is always square.
InverseSolution solve_domain(const InverseProblem& p);

// Circle with x U'(x) = t0 and J+1 zero coefficients.
ExteriorMap cold_start(const BackgroundDensity& d, double t0, int J);

// Newton with the Jacobian frozen at a base map, for many targets close to
// the base moments.
class ChordSolver {
 public:
  ChordSolver(const ExteriorMap& base, const BackgroundDensity& d, int M);
  // Empty when the iteration stops contracting before reaching tol.
  std::optional<ExteriorMap> solve(const MomentVector& targets, double tol, int max_iter = 40) const;

 private:
  ExteriorMap base_;
  BackgroundDensity d_;
  int n_ = 1;
  int M_ = 256;
  Eigen::VectorXd row_scale_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

// d(t0, Re t_k, Im t_k) / d(r, Re u_j, Im u_j) of the M-point trapezoid
// moments, k = 1..J+1.
Eigen::MatrixXd moment_jacobian(const ExteriorMap& m, const BackgroundDensity& d, int M);

// Residual t(m) - targets as a real vector (t0, Re t_k, Im t_k, ...).
std::vector<double> moment_residual(const ExteriorMap& m, const BackgroundDensity& d, const MomentVector& targets,
                                    int M);

}  // namespace dtoda
