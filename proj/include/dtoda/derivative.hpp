#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/inverse.hpp"
#include "dtoda/moments.hpp"

namespace dtoda {

enum class Scheme { Central2, Central4 };
const char* to_string(Scheme s);

struct DerivativeStencil {
  MomentVector base;
  double step_t0 = 0.0;  // 0 picks 1e-3 max(1, |t0|)
  double step_tk = 0.0;  // relative; 0 picks 1e-3. Axis k uses step_tk * r^2 sigma(r^2) * r^-k
  Scheme scheme = Scheme::Central2;
};

struct LatticeOptions {
  int axes = 0;         // number of t_k axes; 0 uses the base order (at least 1)
  int pad = 4;          // extra moments held at zero in every solve
  int samples = 0;      // contour samples; 0 picks from the order
  double solver_tol = 1e-12;
};

struct DerivativeEstimate {
  cplx value = 0.0;
  double error = 0.0;
};

enum class Coord { T0, T, TBar };
struct Axis {
  Coord kind = Coord::T0;
  int k = 0;
};

// F on the lattice of moment coordinates (t0, Re t_1, Im t_1, ...), each node
// solved for its domain; node values are cached.
class TauEvaluator {
 public:
  TauEvaluator(BackgroundDensity d, DerivativeStencil stencil, LatticeOptions opt = {});

  const BackgroundDensity& density() const { return d_; }
  const DerivativeStencil& stencil() const { return st_; }
  const LatticeOptions& options() const { return opt_; }
  const ExteriorMap& base_map() const { return base_map_; }
  // Dual moments of the base domain, up to order 2 * solve order.
  const DualMoments& base_dual() const { return base_dual_; }
  const MomentVector& base_moments() const { return base_targets_; }
  double base_value() const { return base_F_; }
  int axes() const { return K_; }
  int solve_order() const { return n_solve_; }
  int dimension() const { return 1 + 2 * K_; }
  int samples() const { return M_; }
  double axis_step(int i) const { return steps_[static_cast<size_t>(i)]; }
  size_t solves() const;

  Eigen::VectorXd base_point() const;
  double value_at(const Eigen::VectorXd& c);
  std::vector<double> values_at(const std::vector<Eigen::VectorXd>& nodes);

  // Real mixed derivative along real directions, Richardson-extrapolated.
  DerivativeEstimate real_derivative(const std::vector<Eigen::VectorXd>& dirs);
  // Multilinear extension to complex directions.
  DerivativeEstimate derivative(const std::vector<Eigen::VectorXcd>& dirs);
  DerivativeEstimate derivative(const std::vector<Axis>& which);

  Eigen::VectorXcd axis_direction(Axis a) const;
  Eigen::VectorXcd nabla_direction(cplx z) const;  // d0 + D(z) + Dbar(zbar)
  Eigen::VectorXcd D_direction(cplx z) const;
  Eigen::VectorXcd Dbar_direction(cplx z) const;   // Dbar(zbar) for the point z

 private:
  double step_along(const Eigen::VectorXd& u) const;
  double evaluate_node(const Eigen::VectorXd& c) const;
  double stencil_sum(const std::vector<std::pair<Eigen::VectorXd, int>>& groups, const std::vector<double>& h);

  BackgroundDensity d_;
  DerivativeStencil st_;
  LatticeOptions opt_;
  int K_ = 1;
  int n_solve_ = 1;
  int M_ = 512;
  std::vector<double> steps_;
  MomentVector base_targets_;
  ExteriorMap base_map_;
  DualMoments base_dual_;
  double base_F_ = 0.0;
  std::unique_ptr<ChordSolver> chord_;
  mutable std::mutex mutex_;
  std::map<std::vector<double>, double> cache_;
};

// F at a domain given by its map, through the moment identity at M samples.
double tau_value(const ExteriorMap& m, const MomentVector& targets, const BackgroundDensity& d, int n, int M);

// Solves for the domain with the given moments, falling back to continuation
// from the concentric circle when a direct Newton solve fails.
ExteriorMap solve_with_continuation(const MomentVector& targets, const BackgroundDensity& d, int J,
                                    const ExteriorMap* warm, int M, double tol);

DerivativeEstimate tau_derivative(const DerivativeStencil& stencil, const BackgroundDensity& d,
                                  const std::vector<Axis>& which, LatticeOptions opt = {});

}  // namespace dtoda
