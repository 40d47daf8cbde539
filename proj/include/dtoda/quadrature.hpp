#pragma once

#include <functional>
#include <vector>

namespace dtoda {

// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached and safe to call from concurrent workers.
const GaussRule& gauss_legendre(int n);

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n);

// Panelled Gauss-Legendre: `panels` equal panels with n nodes each.
double integrate_panels(const std::function<double(double)>& f, double a, double b, int panels,
                        int n);

}  // namespace dtoda
