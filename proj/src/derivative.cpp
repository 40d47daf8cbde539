#include "dtoda/derivative.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtoda/error.hpp"
#include "dtoda/inverse.hpp"
#include "dtoda/tau.hpp"

namespace dtoda {

const char* to_string(Scheme s) { return s == Scheme::Central2 ? "central2" : "central4"; }

namespace {

struct Tap {
  int offset;
  double weight;
};

const std::vector<Tap>& taps(Scheme s, int order) {
  static const std::vector<Tap> c2[3] = {{{-1, -0.5}, {1, 0.5}},
                                         {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
                                         {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}}};
  static const std::vector<Tap> c4[3] = {
      {{-2, 1.0 / 12}, {-1, -2.0 / 3}, {1, 2.0 / 3}, {2, -1.0 / 12}},
      {{-2, -1.0 / 12}, {-1, 4.0 / 3}, {0, -2.5}, {1, 4.0 / 3}, {2, -1.0 / 12}},
      {{-3, 1.0 / 8}, {-2, -1.0}, {-1, 13.0 / 8}, {1, -13.0 / 8}, {2, 1.0}, {3, -1.0 / 8}}};
  if (order < 1 || order > 3) fail(ErrorCode::InvalidParameter, "derivative order per direction must be 1..3");
  return s == Scheme::Central2 ? c2[order - 1] : c4[order - 1];
}

std::vector<double> key_of(const Eigen::VectorXd& c) { return std::vector<double>(c.data(), c.data() + c.size()); }

}  // namespace

double tau_value(const ExteriorMap& m, const MomentVector& targets, const BackgroundDensity& d, int n, int M) {
  const ContourData cd = contour_data(m, d, M);
  const ContourMoments cm = contour_moments(cd, d, 0, n);
  return tau_moment_identity(targets, cm.v, d, energy_integral(cd, d));
}

ExteriorMap solve_with_continuation(const MomentVector& targets, const BackgroundDensity& d, int J,
                                    const ExteriorMap* warm, int M, double tol) {
  const ExteriorMap start = warm ? warm->with_truncation(J) : cold_start(d, targets.t0, J);
  try {
    return solve_domain({targets, d, start, 50, tol, M}).map;
  } catch (const Error&) {
    if (targets.on_t0_line()) throw;
  }
  std::optional<Error> last;
  for (int stages : {4, 16}) {
    try {
      ExteriorMap m = cold_start(d, targets.t0, J);
      for (int s = 1; s <= stages; ++s) {
        MomentVector part = targets;
        for (auto& t : part.t) t *= static_cast<double>(s) / stages;
        m = solve_domain({part, d, m, 50, tol, M}).map;
      }
      return m;
    } catch (const Error& e) {
      last = e;
    }
  }
  throw *last;
}

TauEvaluator::TauEvaluator(BackgroundDensity d, DerivativeStencil stencil, LatticeOptions opt)
    : d_(std::move(d)), st_(std::move(stencil)), opt_(opt) {
  K_ = opt_.axes > 0 ? opt_.axes : std::max(1, st_.base.order());
  n_solve_ = std::max(K_, st_.base.order()) + std::max(0, opt_.pad);
  int M = opt_.samples > 0 ? opt_.samples : std::max(512, 32 * n_solve_);
  M_ = 1;
  while (M_ < M) M_ *= 2;
  base_targets_ = st_.base.padded(n_solve_);
  base_map_ = solve_with_continuation(base_targets_, d_, n_solve_ - 1, nullptr, M_, opt_.solver_tol);
  chord_ = std::make_unique<ChordSolver>(base_map_, d_, M_);
  const ContourData cd = contour_data(base_map_, d_, M_);
  base_dual_ = contour_moments(cd, d_, 0, 2 * n_solve_).v;
  DualMoments trimmed = base_dual_;
  trimmed.v.resize(static_cast<size_t>(n_solve_));
  base_F_ = tau_moment_identity(base_targets_, trimmed, d_, energy_integral(cd, d_));

  const double r = base_map_.conformal_radius();
  const double x = std::clamp(r * r, std::max(d_.r0_sq(), 1e-300), d_.r1_sq());
  const double scale = x * d_.sigma(x);
  const double rel = st_.step_tk > 0.0 ? st_.step_tk : 1e-3;
  steps_.assign(static_cast<size_t>(dimension()), 0.0);
  steps_[0] = st_.step_t0 > 0.0 ? st_.step_t0 : 1e-3 * std::max(1.0, std::abs(base_targets_.t0));
  for (int k = 1; k <= K_; ++k) {
    const double hk = rel * scale * std::pow(r, -k);
    steps_[static_cast<size_t>(2 * k - 1)] = hk;
    steps_[static_cast<size_t>(2 * k)] = hk;
  }
  cache_[key_of(base_point())] = base_F_;
}

size_t TauEvaluator::solves() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

Eigen::VectorXd TauEvaluator::base_point() const {
  Eigen::VectorXd c(dimension());
  c(0) = base_targets_.t0;
  for (int k = 1; k <= K_; ++k) {
    c(2 * k - 1) = base_targets_.tk(k).real();
    c(2 * k) = base_targets_.tk(k).imag();
  }
  return c;
}

double TauEvaluator::evaluate_node(const Eigen::VectorXd& c) const {
  MomentVector targets = base_targets_;
  targets.t0 = c(0);
  for (int k = 1; k <= K_; ++k) targets.t[static_cast<size_t>(k - 1)] = cplx(c(2 * k - 1), c(2 * k));
  // Nodes sit close to the base, so the frozen base Jacobian usually suffices.
  if (auto m = chord_->solve(targets, opt_.solver_tol)) return tau_value(*m, targets, d_, n_solve_, M_);
  const ExteriorMap m = solve_with_continuation(targets, d_, n_solve_ - 1, &base_map_, M_, opt_.solver_tol);
  return tau_value(m, targets, d_, n_solve_, M_);
}

double TauEvaluator::value_at(const Eigen::VectorXd& c) { return values_at({c})[0]; }

std::vector<double> TauEvaluator::values_at(const std::vector<Eigen::VectorXd>& nodes) {
  std::vector<std::vector<double>> keys;
  keys.reserve(nodes.size());
  std::vector<size_t> missing;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    std::map<std::vector<double>, size_t> seen;
    for (size_t i = 0; i < nodes.size(); ++i) {
      keys.push_back(key_of(nodes[i]));
      if (!cache_.count(keys.back()) && seen.emplace(keys.back(), i).second) missing.push_back(i);
    }
  }
  std::vector<double> fresh(missing.size(), 0.0);
  std::vector<std::string> errors(missing.size());
  const long long n = static_cast<long long>(missing.size());
#pragma omp parallel for schedule(dynamic)
  for (long long j = 0; j < n; ++j) {
    try {
      fresh[static_cast<size_t>(j)] = evaluate_node(nodes[missing[static_cast<size_t>(j)]]);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(j)] = e.what();
    }
  }
  for (size_t j = 0; j < missing.size(); ++j)
    if (!errors[j].empty()) fail(ErrorCode::StencilInfeasible, "stencil node solve failed: " + errors[j]);
  std::lock_guard<std::mutex> lock(mutex_);
  for (size_t j = 0; j < missing.size(); ++j) cache_[keys[missing[j]]] = fresh[j];
  std::vector<double> out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = cache_.at(keys[i]);
  return out;
}

double TauEvaluator::step_along(const Eigen::VectorXd& u) const {
  double h = INFINITY;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u(i) != 0.0) h = std::min(h, steps_[static_cast<size_t>(i)] / std::abs(u(i)));
  if (!std::isfinite(h)) fail(ErrorCode::InvalidParameter, "zero derivative direction");
  return h;
}

double TauEvaluator::stencil_sum(const std::vector<std::pair<Eigen::VectorXd, int>>& groups,
                                 const std::vector<double>& h) {
  std::vector<Eigen::VectorXd> nodes{base_point()};
  std::vector<double> weights{1.0};
  for (size_t g = 0; g < groups.size(); ++g) {
    const auto& tp = taps(st_.scheme, groups[g].second);
    const double scale = std::pow(h[g], groups[g].second);
    std::vector<Eigen::VectorXd> next;
    std::vector<double> nw;
    for (size_t i = 0; i < nodes.size(); ++i)
      for (const Tap& t : tp) {
        next.push_back(nodes[i] + (t.offset * h[g]) * groups[g].first);
        nw.push_back(weights[i] * t.weight / scale);
      }
    nodes.swap(next);
    weights.swap(nw);
  }
  const std::vector<double> F = values_at(nodes);
  double sum = 0.0;
  for (size_t i = 0; i < F.size(); ++i) sum += weights[i] * F[i];
  return sum;
}

DerivativeEstimate TauEvaluator::real_derivative(const std::vector<Eigen::VectorXd>& dirs) {
  std::vector<std::pair<Eigen::VectorXd, int>> groups;
  for (const auto& u : dirs) {
    if (u.size() != dimension()) fail(ErrorCode::InvalidParameter, "direction has the wrong dimension");
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == u; });
    if (it == groups.end()) groups.emplace_back(u, 1);
    else ++it->second;
  }
  // Canonical order makes mixed derivatives exactly symmetric in their directions.
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return std::lexicographical_compare(a.first.data(), a.first.data() + a.first.size(), b.first.data(),
                                        b.first.data() + b.first.size());
  });
  std::vector<double> h, h2;
  double weight_sum = 1.0;
  for (const auto& g : groups) {
    h.push_back(step_along(g.first));
    h2.push_back(0.5 * h.back());
    double s = 0.0;
    for (const Tap& t : taps(st_.scheme, g.second)) s += std::abs(t.weight);
    weight_sum *= s / std::pow(h2.back(), g.second);
  }
  const double D1 = stencil_sum(groups, h);
  const double D2 = stencil_sum(groups, h2);
  const double p = st_.scheme == Scheme::Central2 ? 4.0 : 16.0;
  DerivativeEstimate out;
  out.value = (p * D2 - D1) / (p - 1.0);
  // Node values carry solver and quadrature noise near 1e-14 relative.
  const double noise = 1e-14 * std::max(1.0, std::abs(base_F_)) * weight_sum;
  out.error = std::abs(D2 - D1) / (p - 1.0) + noise;
  if (noise > 1e-2 * std::max(1.0, std::abs(out.value.real()))) {
    std::ostringstream os;
    os << "finite-difference noise " << noise << " swamps the derivative " << out.value.real();
    fail(ErrorCode::NoiseFloor, os.str());
  }
  return out;
}

DerivativeEstimate TauEvaluator::derivative(const std::vector<Eigen::VectorXcd>& dirs) {
  const size_t q = dirs.size();
  DerivativeEstimate total;
  for (unsigned mask = 0; mask < (1u << q); ++mask) {
    std::vector<Eigen::VectorXd> real_dirs;
    cplx factor = 1.0;
    bool zero = false;
    for (size_t i = 0; i < q; ++i) {
      const bool imag = (mask >> i) & 1u;
      Eigen::VectorXd u = imag ? Eigen::VectorXd(dirs[i].imag()) : Eigen::VectorXd(dirs[i].real());
      if (u.isZero(0.0)) {
        zero = true;
        break;
      }
      if (imag) factor *= cplx(0.0, 1.0);
      real_dirs.push_back(std::move(u));
    }
    if (zero) continue;
    const DerivativeEstimate part = real_derivative(real_dirs);
    total.value += factor * part.value;
    total.error += part.error;
  }
  return total;
}

Eigen::VectorXcd TauEvaluator::axis_direction(Axis a) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension());
  if (a.kind == Coord::T0) {
    v(0) = 1.0;
    return v;
  }
  if (a.k < 1 || a.k > K_) fail(ErrorCode::InvalidParameter, "moment index outside the lattice axes");
  const double sign = a.kind == Coord::T ? -1.0 : 1.0;
  v(2 * a.k - 1) = 0.5;
  v(2 * a.k) = cplx(0.0, 0.5 * sign);
  return v;
}

Eigen::VectorXcd TauEvaluator::D_direction(cplx z) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension());
  cplx p = 1.0;
  for (int k = 1; k <= K_; ++k) {
    p /= z;
    const cplx c = p / static_cast<double>(k);
    v(2 * k - 1) = 0.5 * c;
    v(2 * k) = cplx(0.0, -0.5) * c;
  }
  return v;
}

Eigen::VectorXcd TauEvaluator::Dbar_direction(cplx z) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension());
  cplx p = 1.0;
  const cplx zb = std::conj(z);
  for (int k = 1; k <= K_; ++k) {
    p /= zb;
    const cplx c = p / static_cast<double>(k);
    v(2 * k - 1) = 0.5 * c;
    v(2 * k) = cplx(0.0, 0.5) * c;
  }
  return v;
}

Eigen::VectorXcd TauEvaluator::nabla_direction(cplx z) const {
  Eigen::VectorXcd v = D_direction(z) + Dbar_direction(z);
  v(0) = 1.0;
  return Eigen::VectorXcd(v.real().cast<cplx>());
}

DerivativeEstimate TauEvaluator::derivative(const std::vector<Axis>& which) {
  std::vector<Eigen::VectorXcd> dirs;
  for (const Axis& a : which) dirs.push_back(axis_direction(a));
  return derivative(dirs);
}

DerivativeEstimate tau_derivative(const DerivativeStencil& stencil, const BackgroundDensity& d,
                                  const std::vector<Axis>& which, LatticeOptions opt) {
  int kmax = 0;
  for (const Axis& a : which) kmax = std::max(kmax, a.k);
  opt.axes = std::max({opt.axes, kmax, stencil.base.order(), 1});
  TauEvaluator ev(d, stencil, opt);
  return ev.derivative(which);
}

}  // namespace dtoda
