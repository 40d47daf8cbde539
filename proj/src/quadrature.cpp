#include "dtoda/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <gsl/gsl_integration.h>

#include "dtoda/error.hpp"

namespace dtoda {

namespace {

GaussRule build_rule(int n) {
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  if (table == nullptr) fail(ErrorCode::InvalidParameter, "Gauss-Legendre table allocation failed");
  GaussRule rule;
  rule.nodes.resize(static_cast<size_t>(n));
  rule.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<size_t>(i), &x, &w, table);
    rule.nodes[static_cast<size_t>(i)] = x;
    rule.weights[static_cast<size_t>(i)] = w;
  }
  gsl_integration_glfixed_table_free(table);
  std::vector<size_t> order(rule.nodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return rule.nodes[a] < rule.nodes[b]; });
  GaussRule sorted;
  for (size_t i : order) {
    sorted.nodes.push_back(rule.nodes[i]);
    sorted.weights.push_back(rule.weights[i]);
  }
  return sorted;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::InvalidParameter, "Gauss-Legendre order must be positive");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<GaussRule>(build_rule(n))).first;
  return *it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b, int panels,
                        int n) {
  double sum = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) sum += integrate_gl(f, a + p * h, a + (p + 1) * h, n);
  return sum;
}

}  // namespace dtoda
