// Serial reference against the OpenMP kernels on the heavy contour and
// quadrature paths. Exits nonzero if the two disagree.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/growth.hpp"
#include "dtoda/kernels.hpp"
#include "dtoda/moments.hpp"
#include "dtoda/tau.hpp"

using namespace dtoda;

namespace {

struct Case {
  std::string name;
  std::function<std::vector<double>()> run;
};

struct Timing {
  double seconds = 0.0;
  std::vector<double> result;
};

Timing time_case(const Case& c, kernels::Execution e, int reps) {
  kernels::ScopedExecution scope(e);
  Timing t;
  double best = INFINITY;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    t.result = c.run();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  t.seconds = best;
  return t;
}

// Norm-wise, since high moments are small sums of large terms.
double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0, scale = 1.0;
  for (size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(a[i]));
  }
  return d / scale;
}

std::vector<double> flatten(const MomentVector& mv) {
  std::vector<double> out{mv.t0};
  for (cplx t : mv.t) {
    out.push_back(t.real());
    out.push_back(t.imag());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      quick = true;
    } else {
      std::fprintf(stderr, "usage: dtoda_bench [--quick]\n");
      return 1;
    }
  }
  kernels::configure_threads();
  const int reps = quick ? 1 : 3;
  const int M = quick ? 1 << 12 : 1 << 16;

  const auto sigma1 = BackgroundDensity::homogeneous(1.0, 1.0, 0.0, 100.0);
  const auto cyl = BackgroundDensity::cylinder(1.0, 0.4, 100.0);
  const ExteriorMap wavy(1.3, {0.0, 0.12, cplx(0.03, 0.01), 0.0, 0.01});

  double rho = 0.0;
  for (cplx z : boundary_samples(wavy, 1024)) rho = std::max(rho, std::abs(z));

  std::vector<Case> cases = {
      {"forward_moments N=32", [&] { return flatten(forward_moments(wavy, cyl, 32, M)); }},
      {"dual_moments N=32",
       [&] {
         const DualMoments dm = dual_moments(wavy, cyl, 32, M);
         std::vector<double> out{dm.v0, dm.u0};
         // v_k in units of rho^k, the size of its summands.
         double scale = 1.0;
         for (cplx v : dm.v) {
           scale *= rho;
           out.push_back(v.real() / scale);
           out.push_back(v.imag() / scale);
         }
         return out;
       }},
      {"energy_integral", [&] { return std::vector<double>{energy_integral(wavy, cyl, M)}; }},
      {"tau_double_integral", [&] { return std::vector<double>{tau_double_integral(wavy, sigma1, quick ? 1e-6 : 1e-9).value}; }},
      {"front_tracking", [&] {
         FrontTrackingOptions fo;
         fo.refit_J = 12;
         const Trajectory tr = grow_front_tracking(wavy, sigma1, 0.01, quick ? 1 : 4, fo);
         return flatten(forward_moments(tr.states.back().map, sigma1, 4, 512));
       }},
  };

  std::printf("threads %d, %s\n", kernels::thread_count(), quick ? "quick" : "full");
  std::printf("%-24s %12s %12s %8s %12s\n", "case", "serial [s]", "parallel [s]", "speedup", "max rel diff");
  bool ok = true;
  for (const Case& c : cases) {
    const Timing s = time_case(c, kernels::Execution::Serial, reps);
    const Timing p = time_case(c, kernels::Execution::Parallel, reps);
    const double diff = max_rel_diff(s.result, p.result);
    // Chunked pairwise sums reorder additions; anything beyond rounding is a bug.
    const bool agree = diff <= 1e-11;
    ok = ok && agree;
    std::printf("%-24s %12.4f %12.4f %8.2f %12.2e%s\n", c.name.c_str(), s.seconds, p.seconds,
                s.seconds / std::max(p.seconds, 1e-12), diff, agree ? "" : "  MISMATCH");
  }
  return ok ? 0 : 1;
}
