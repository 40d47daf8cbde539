#include "dtoda/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dtoda/error.hpp"
#include "dtoda/kernels.hpp"
#include "dtoda/quadrature.hpp"

namespace dtoda {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);
}  // namespace

bool MomentVector::on_t0_line(double tol) const {
  return std::all_of(t.begin(), t.end(), [&](cplx c) { return std::abs(c) <= tol; });
}

MomentVector MomentVector::padded(int N) const {
  MomentVector out = *this;
  out.t.resize(static_cast<size_t>(std::max(N, order())), cplx(0.0));
  return out;
}

ContourData contour_data(const ExteriorMap& m, const BackgroundDensity& d, int M) {
  ContourData c;
  const size_t n = static_cast<size_t>(M);
  c.z.resize(n);
  c.z_theta.resize(n);
  c.x.resize(n);
  c.s.resize(n);
  c.U.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const cplx w = std::polar(1.0, kTwoPi * static_cast<double>(k) / M);
    c.z[k] = m.eval(w);
    c.z_theta[k] = kI * w * m.derivative(w);
    c.x[k] = std::norm(c.z[k]);
    if (!d.annulus().contains(c.x[k])) {
      std::ostringstream os;
      os.precision(10);
      os << "boundary point |z|^2 = " << c.x[k] << " outside the annulus [" << d.r0_sq() << ", " << d.r1_sq() << "]";
      fail(ErrorCode::BoundaryOutsideAnnulus, os.str());
    }
  }
  if (winding_number(c.z, cplx(0.0)) != 1)
    fail(ErrorCode::BoundaryOutsideAnnulus, "boundary does not enclose the inner circle");
  for (size_t k = 0; k < n; ++k) {
    c.s[k] = d.flux(c.x[k]);
    c.U[k] = d.potential(c.x[k]);
  }
  return c;
}

ContourMoments contour_moments(const ContourData& c, const BackgroundDensity& d, int Nt, int Nv) {
  const size_t n = c.z.size();
  const size_t width = 2 + static_cast<size_t>(Nt) + static_cast<size_t>(Nv);
  std::vector<cplx> acc(width, cplx(0.0));
  kernels::accumulate<cplx>(n, width, acc.data(), [&](size_t m, cplx* out) {
    const cplx z = c.z[m];
    const cplx dlog = c.z_theta[m] / z;
    const cplx q = c.s[m] * dlog;
    out[0] += q;
    out[1] += (std::log(c.x[m]) * c.s[m] - c.U[m]) * dlog;
    const cplx zi = 1.0 / z;
    cplx p = q;
    for (int k = 1; k <= Nt; ++k) {
      p *= zi;
      out[1 + static_cast<size_t>(k)] += p;
    }
    p = q;
    for (int k = 1; k <= Nv; ++k) {
      p *= z;
      out[1 + static_cast<size_t>(Nt + k)] += p;
    }
  });
  const double M = static_cast<double>(n);
  ContourMoments r;
  const cplx t0 = acc[0] / (kI * M);
  const cplx v0 = acc[1] / (kI * M);
  r.t.t0 = t0.real();
  r.t0_imag = t0.imag();
  r.v.u0 = d.u0();
  r.v.v0 = v0.real() - r.v.u0;
  r.v0_imag = v0.imag();
  r.t.t.resize(static_cast<size_t>(Nt));
  for (int k = 1; k <= Nt; ++k) r.t.t[static_cast<size_t>(k - 1)] = acc[1 + static_cast<size_t>(k)] / (kI * (k * M));
  r.v.v.resize(static_cast<size_t>(Nv));
  for (int k = 1; k <= Nv; ++k) r.v.v[static_cast<size_t>(k - 1)] = acc[1 + static_cast<size_t>(Nt + k)] / (kI * M);
  return r;
}

namespace {

int resolved_samples(int N, int M) {
  M = std::max({M, 256, 8 * N});
  int p = 1;
  while (p < M) p *= 2;
  return p;
}

ContourMoments checked_moments(const ExteriorMap& m, const BackgroundDensity& d, int N, int M, bool dual) {
  if (N < 0) fail(ErrorCode::InvalidParameter, "moment order must be non-negative");
  M = resolved_samples(N, M);
  const ContourMoments a = contour_moments(contour_data(m, d, M), d, dual ? 0 : N, dual ? N : 0);
  const ContourMoments b = contour_moments(contour_data(m, d, 2 * M), d, dual ? 0 : N, dual ? N : 0);
  double change = 0.0;
  if (dual) {
    change = std::abs(a.v.v0 - b.v.v0);
    for (int k = 0; k < N; ++k) change = std::max(change, std::abs(a.v.v[static_cast<size_t>(k)] - b.v.v[static_cast<size_t>(k)]));
  } else {
    change = std::abs(a.t.t0 - b.t.t0);
    for (int k = 0; k < N; ++k) change = std::max(change, std::abs(a.t.t[static_cast<size_t>(k)] - b.t.t[static_cast<size_t>(k)]));
  }
  const double imag = dual ? std::abs(b.v0_imag) : std::abs(b.t0_imag);
  const double scale = std::max(1.0, dual ? std::abs(b.v.v0) : std::abs(b.t.t0));
  if (change > 1e-9 * scale || imag > 1e-10 * scale) {
    std::ostringstream os;
    os << "contour quadrature not converged at M = " << M << " (change " << change << ", imaginary part " << imag << ")";
    fail(ErrorCode::QuadratureNotConverged, os.str());
  }
  return b;
}

}  // namespace

MomentVector forward_moments(const ExteriorMap& m, const BackgroundDensity& d, int N, int M) {
  return checked_moments(m, d, N, M, false).t;
}

DualMoments dual_moments(const ExteriorMap& m, const BackgroundDensity& d, int N, int M) {
  return checked_moments(m, d, N, M, true).v;
}

double potential_interior(const MomentVector& mv, const BackgroundDensity& d, cplx z, bool* warning) {
  const double x = std::norm(z);
  double sum = 0.0, last = 0.0;
  cplx p = 1.0;
  for (int k = 1; k <= mv.order(); ++k) {
    p *= z;
    last = 2.0 * (mv.tk(k) * p).real();
    sum += last;
  }
  const double value = -d.potential(x) - d.u0() + mv.t0 * std::log(x) + sum;
  if (warning) *warning = mv.order() > 0 && std::abs(last) > 1e-8 * std::max(std::abs(value), 1e-300);
  return value;
}

double potential_exterior(const DualMoments& dm, cplx z, bool* warning) {
  double sum = 0.0, last = 0.0;
  const cplx zi = 1.0 / z;
  cplx p = 1.0;
  for (int k = 1; k <= dm.order(); ++k) {
    p *= zi;
    last = 2.0 * (dm.vk(k) * p).real() / k;
    sum += last;
  }
  const double value = dm.v0 + sum;
  if (warning) *warning = dm.order() > 0 && std::abs(last) > 1e-8 * std::max(std::abs(value), 1e-300);
  return value;
}

PotentialValue potential_field(const ExteriorMap& m, const MomentVector& mv, const DualMoments& dm,
                               const BackgroundDensity& d, cplx z) {
  if (std::norm(z) < d.r0_sq() * (1.0 - 1e-12)) fail(ErrorCode::OutOfAnnulus, "point inside the inner circle");
  PotentialValue out;
  out.interior = winding_number(boundary_samples(m, default_samples(m)), z) != 0;
  out.value = out.interior ? potential_interior(mv, d, z, &out.truncation_warning)
                           : potential_exterior(dm, z, &out.truncation_warning);
  return out;
}

cplx cauchy_transform(const ExteriorMap& m, const BackgroundDensity& d, cplx z, int M) {
  const ContourData c = contour_data(m, d, M);
  double step = 0.0;
  for (size_t k = 0; k < c.z.size(); ++k) step = std::max(step, std::abs(c.z[(k + 1) % c.z.size()] - c.z[k]));
  if (distance_to_polygon(c.z, z) < 5.0 * step)
    fail(ErrorCode::TooCloseToBoundary, "Cauchy transform evaluated too close to the boundary");
  cplx acc = 0.0;
  kernels::accumulate<cplx>(c.z.size(), 1, &acc, [&](size_t k, cplx* out) {
    out[0] += c.s[k] / c.z[k] * c.z_theta[k] / (c.z[k] - z);
  });
  return acc / (kI * static_cast<double>(M));
}

double radial_primitive(const BackgroundDensity& d, const std::function<double(double)>& f, double x, int n) {
  const GaussRule& rule = gauss_legendre(n);
  double sum = 0.0;
  if (d.r0_sq() > 0.0) {
    const double a = std::log(d.r0_sq()), b = std::log(x);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      const double X = mid + half * rule.nodes[i];
      const double xe = std::exp(X);
      sum += rule.weights[i] * f(xe) * xe;
    }
    return half * sum;
  }
  const double q = d.family() == Family::Homogeneous ? std::max(1.0, 4.0 / d.alpha()) : 4.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = 0.5 * (1.0 + rule.nodes[i]);
    const double xu = x * std::pow(u, q);
    sum += rule.weights[i] * f(xu) * x * q * std::pow(u, q - 1.0);
  }
  return 0.5 * sum;
}

double polar_integral(const ExteriorMap& m, const BackgroundDensity& d, const std::function<double(double)>& f,
                      int M, int n) {
  const ContourData c = contour_data(m, d, M);
  double acc = 0.0;
  kernels::accumulate<double>(c.z.size(), 1, &acc, [&](size_t k, double* out) {
    out[0] += radial_primitive(d, f, c.x[k], n) * (c.z_theta[k] / c.z[k]).imag();
  });
  return acc / static_cast<double>(M);
}

double energy_integral(const ContourData& c, const BackgroundDensity& d) {
  double acc = 0.0;
  kernels::accumulate<double>(c.z.size(), 1, &acc, [&](size_t k, double* out) {
    out[0] += d.energy_primitive(c.x[k]) * (c.z_theta[k] / c.z[k]).imag();
  });
  return acc / static_cast<double>(c.z.size());
}

double energy_integral(const ExteriorMap& m, const BackgroundDensity& d, int M) {
  return energy_integral(contour_data(m, d, M), d);
}

}  // namespace dtoda
