#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dtoda/density.hpp"
#include "dtoda/derivative.hpp"
#include "dtoda/moments.hpp"

namespace dtoda {

struct IdentityReport {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  nlohmann::json configuration;  // everything needed to rerun the check
};

nlohmann::json to_json(const IdentityReport& r);

struct IdentityOptions {
  double tolerance = 0.0;  // 0 uses 10x the estimated error budget
  Scheme scheme = Scheme::Central2;
  double step_t0 = 0.0;
  double step_tk = 0.0;
  int axes = 0;           // length of the D(z) series; 0 picks it from the points
  int pad = 0;             // zero moments appended to each solve; 0 adapts to the map tail
  double param_step = 0.0;  // step in a density parameter; 0 uses 1e-3 max(1, |lambda|)
};

IdentityReport check_gradient(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& opt = {});

IdentityReport check_green_from_tau(const MomentVector& base, const BackgroundDensity& d, cplx z, cplx zeta,
                                    const IdentityOptions& opt = {});

IdentityReport check_w_from_tau(const MomentVector& base, const BackgroundDensity& d, cplx z,
                                const IdentityOptions& opt = {});

IdentityReport check_hirota(const MomentVector& base, const BackgroundDensity& d, cplx z, cplx zeta,
                            const IdentityOptions& opt = {});

// d0^3 F against the boundary integral of 1/(|z'|^2 sigma), the full third
// derivative at one point triple, and the t0-variation of the Green function.
IdentityReport check_third_derivative(const MomentVector& base, const BackgroundDensity& d,
                                      const std::vector<cplx>& triple = {}, const IdentityOptions& opt = {});

IdentityReport check_parameter_derivative(const MomentVector& base, const BackgroundDensity& d, Parameter lambda,
                                          const IdentityOptions& opt = {});

IdentityReport check_homogeneity(const MomentVector& base, const BackgroundDensity& d,
                                 const IdentityOptions& opt = {});

// |Im sum k t_k v_k| for the homogeneous family, where the sum is real.
IdentityReport check_reality(const MomentVector& base, const BackgroundDensity& d, const IdentityOptions& opt = {});

// tau holds tau_2..tau_K; tau1 is the linear coefficient (zero in the
// hierarchy proper, -R log r0^2 for the cylinder family).
IdentityReport check_dkdv(const std::vector<double>& tau, double t0, int which_k, double tau1 = 0.0,
                          double tolerance = 1e-10);

// Coefficients tau_1, tau_2 of the cylinder family, for which
// u = log r^2 = beta t0 + log r0^2.
std::vector<double> kdv_coefficients(const BackgroundDensity& d);

// Solves t0 = sum k tau_k u^(k-1) (coefficients from tau_1) by safeguarded Newton.
double kdv_solve(const std::vector<double>& coeffs, double t0);

struct SuiteRequest {
  std::vector<std::string> suites;  // gradient, green, w, hirota, third, parameter, homogeneity, dkdv
  MomentVector base;
  std::vector<cplx> points;         // exterior points for green, w and hirota
  IdentityOptions options;
};

// Runs the requested checks concurrently; reports are sorted by name.
std::vector<IdentityReport> run_suite(const SuiteRequest& req, const BackgroundDensity& d);

std::vector<std::string> suite_names();

}  // namespace dtoda
