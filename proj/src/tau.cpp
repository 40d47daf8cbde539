#include "dtoda/tau.hpp"

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

const char* to_string(TauMethod m) {
  switch (m) {
    case TauMethod::DoubleIntegral: return "double_integral";
    case TauMethod::MomentIdentity: return "moment_identity";
    case TauMethod::ClosedForm: return "closed_form";
  }
  return "unknown";
}

T0LineValues t0_line_closed(const BackgroundDensity& d, double t0) {
  if (!d.admissible(t0)) {
    std::ostringstream os;
    os.precision(17);
    os << "t0 = " << t0 << " outside admissible interval [" << d.t0_min() << ", " << d.t0_max() << "]";
    fail(ErrorCode::OutOfAdmissibleInterval, os.str());
  }
  T0LineValues out;
  const double r0 = d.r0_sq();
  switch (d.family()) {
    case Family::Homogeneous: {
      const double a = d.alpha(), c = d.c(), u0 = d.u0();
      const double c0 = r0 > 0.0 ? c * c * std::pow(r0, 2 * a) / (4 * a * a * a) * (2 * a * std::log(r0) - 1.0) : 0.0;
      const double lg = std::log(a * t0 / c);
      out.F = t0 * t0 / (2 * a) * lg - 3 * t0 * t0 / (4 * a) - u0 * t0 + c0;
      out.v0 = t0 / a * lg - t0 / a - u0;
      out.log_r_sq = lg / a;
      break;
    }
    case Family::Cylinder: {
      const double R = d.R(), l0 = std::log(r0);
      out.F = t0 * t0 * t0 / (6 * R) + 0.5 * t0 * t0 * l0;
      out.v0 = t0 * t0 / (2 * R) + t0 * l0;
      out.log_r_sq = t0 / R + l0;
      break;
    }
    case Family::General: {
      const double k = d.k(), C1 = d.C1(), C0 = d.C0(), u0 = d.u0();
      const double nu = (k - 1.0) / (k - 2.0);
      const double ak = std::pow(k - 2.0, k - 2.0) / (std::pow(k - 1.0, k - 1.0) * k);
      const double L0 = C1 * std::log(r0) + C0;
      const double K0 = C1 * C1 * nu * nu / (2 * nu - 1) * std::pow(L0, 2 * nu - 2) * ((nu - 1) * std::log(r0) - C0 / (2 * C1));
      const double q = t0 / C1;  // positive on the admissible interval
      out.F = ak * std::pow(q, k - 1.0) * t0 - C0 / (2 * C1) * t0 * t0 - u0 * t0 + K0;
      out.v0 = k * ak * std::pow(q, k - 1.0) - C0 / C1 * t0 - u0;
      out.log_r_sq = k * (k - 1.0) * ak * std::pow(q, k - 2.0) / C1 - C0 / C1;
      break;
    }
    case Family::Tabulated:
      fail(ErrorCode::UnsupportedFamily, "no closed form for a tabulated density");
  }
  return out;
}

TauSample tau_t0_closed(const BackgroundDensity& d, double t0) {
  TauSample s;
  s.value = t0_line_closed(d, t0).F;
  s.method = TauMethod::ClosedForm;
  s.moments.t0 = t0;
  s.estimated_error = 0.0;
  return s;
}

double tau_moment_identity(const MomentVector& mv, const DualMoments& dm, const BackgroundDensity& d, double energy) {
  double sum = 0.0;
  for (int k = 1; k <= mv.order(); ++k) sum += 2.0 * (mv.tk(k) * dm.vk(k)).real();
  return 0.5 * (-energy + mv.t0 * dm.v0 + sum - dm.u0 * mv.t0 + dm.u0 * d.inner_flux());
}

TauSample tau_via_moments(const MomentVector& mv, const DualMoments& dm, const BackgroundDensity& d,
                          const ExteriorMap& m, int M) {
  if (M <= 0) M = default_samples(m, 512);
  const double fine = energy_integral(m, d, M);
  const double coarse = energy_integral(m, d, M / 2);
  TauSample s;
  s.value = tau_moment_identity(mv, dm, d, fine);
  s.method = TauMethod::MomentIdentity;
  s.moments = mv;
  // The last retained t_k v_k term stands in for the truncated tail.
  const int n = std::min(mv.order(), dm.order());
  const double tail = n > 0 ? 2.0 * std::abs(mv.tk(n)) * std::abs(dm.vk(n)) : 0.0;
  s.estimated_error = 0.5 * std::abs(fine - coarse) + tail + 1e-15 * std::max(1.0, std::abs(s.value));
  return s;
}

namespace {

bool is_centered_circle(const ExteriorMap& m) {
  for (cplx u : m.coeffs())
    if (std::abs(u) > 1e-14 * m.conformal_radius()) return false;
  return true;
}

// Gauss-Legendre rule for integrals over x in [r0^2, xb], returned as
// (nodes, weights) with the Jacobian folded into the weights.
void radial_rule(const BackgroundDensity& d, double xb, int n, std::vector<double>& x, std::vector<double>& w) {
  const GaussRule& g = gauss_legendre(n);
  x.resize(static_cast<size_t>(n));
  w.resize(static_cast<size_t>(n));
  if (d.r0_sq() > 0.0) {
    const double a = std::log(d.r0_sq()), b = std::log(xb);
    for (int i = 0; i < n; ++i) {
      const size_t k = static_cast<size_t>(i);
      x[k] = std::exp(0.5 * (a + b) + 0.5 * (b - a) * g.nodes[k]);
      w[k] = 0.5 * (b - a) * g.weights[k] * x[k];
    }
  } else {
    const double q = std::max(1.0, 4.0 / d.alpha());
    for (int i = 0; i < n; ++i) {
      const size_t k = static_cast<size_t>(i);
      const double u = 0.5 * (1.0 + g.nodes[k]);
      x[k] = xb * std::pow(u, q);
      w[k] = 0.5 * g.weights[k] * xb * q * std::pow(u, q - 1.0);
    }
  }
}

double nested_t0_line(const BackgroundDensity& d, double xb, int n) {
  std::vector<double> xo, wo, xi, wi;
  radial_rule(d, xb, n, xo, wo);
  double F = 0.0;
  for (size_t i = 0; i < xo.size(); ++i) {
    radial_rule(d, xo[i], n, xi, wi);
    double inner = 0.0;
    for (size_t j = 0; j < xi.size(); ++j) inner += wi[j] * std::log(xi[j]) * d.sigma(xi[j]);
    F += wo[i] * d.sigma(xo[i]) * inner;
  }
  return F;
}

}  // namespace

double interior_potential(const ContourData& c, const BackgroundDensity& d, cplx z, size_t stride) {
  const double x = std::norm(z);
  const cplx zi = 1.0 / z, zb = std::conj(z);
  cplx acc = 0.0;
  const size_t n = c.z.size();
  for (size_t m = 0; m < n; m += stride) {
    const cplx zeta = c.z[m];
    const double lg = std::log(std::norm(zi - 1.0 / zeta));
    const cplx t1 = lg * c.s[m] * c.z_theta[m] / zeta;
    const cplx cz = std::conj(zeta);
    const cplx t2 = c.U[m] * zb * std::conj(c.z_theta[m]) / ((cz - zb) * cz);
    acc += t1 + t2;
  }
  const double count = static_cast<double>((n + stride - 1) / stride);
  return -d.potential(x) - d.u0() - (acc / (kI * count)).real();
}

TauSample tau_double_integral(const ExteriorMap& m, const BackgroundDensity& d, double tol) {
  TauSample s;
  s.method = TauMethod::DoubleIntegral;
  const int Mm = default_samples(m);
  s.moments = forward_moments(m, d, std::max(1, m.truncation() + 1), Mm);

  if (is_centered_circle(m)) {
    const double xb = m.conformal_radius() * m.conformal_radius();
    double prev = nested_t0_line(d, xb, 16);
    for (int n = 32; n <= 512; n *= 2) {
      const double cur = nested_t0_line(d, xb, n);
      if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) {
        s.value = cur;
        s.estimated_error = std::abs(cur - prev);
        return s;
      }
      prev = cur;
    }
    s.value = prev;
    fail(ErrorCode::ToleranceNotReached, "nested radial quadrature did not reach the tolerance");
  }

  struct Level {
    int outer, radial, inner;
  };
  const Level levels[] = {{64, 16, 256}, {128, 24, 512}, {256, 32, 1024}, {512, 48, 2048}};
  constexpr int kMaxInner = 1 << 17;
  double prev = 0.0;
  bool have_prev = false;
  for (const Level& lv : levels) {
    // Outer boundary parametrization.
    std::vector<cplx> zb(static_cast<size_t>(lv.outer)), nb(zb.size());
    std::vector<double> dphi(zb.size());
    double perimeter = 0.0;
    for (int j = 0; j < lv.outer; ++j) {
      const size_t k = static_cast<size_t>(j);
      const cplx w = std::polar(1.0, kTwoPi * j / lv.outer);
      zb[k] = m.eval(w);
      const cplx zt = kI * w * m.derivative(w);
      dphi[k] = (zt / zb[k]).imag();
      nb[k] = -kI * zt / std::abs(zt);
      perimeter += std::abs(zt) * kTwoPi / lv.outer;
      if (!(dphi[k] > 0.0)) fail(ErrorCode::NotStarShaped, "domain is not star-shaped about the origin");
    }
    // Inner sample counts per node; boundary data at the largest one.
    std::vector<double> xr, wr;
    std::vector<int> need(static_cast<size_t>(lv.outer * lv.radial));
    int mmax = lv.inner;
    for (int j = 0; j < lv.outer; ++j) {
      const size_t k = static_cast<size_t>(j);
      radial_rule(d, std::norm(zb[k]), lv.radial, xr, wr);
      const cplx dir = zb[k] / std::abs(zb[k]);
      const double cosb = std::max(0.05, std::abs((std::conj(nb[k]) * dir).real()));
      for (int i = 0; i < lv.radial; ++i) {
        const double dist = (std::abs(zb[k]) - std::sqrt(xr[static_cast<size_t>(i)])) * cosb;
        int Mi = lv.inner;
        while (Mi < kMaxInner && Mi * dist < 6.0 * perimeter) Mi *= 2;
        need[k * static_cast<size_t>(lv.radial) + static_cast<size_t>(i)] = Mi;
        mmax = std::max(mmax, Mi);
      }
    }
    const ContourData cd = contour_data(m, d, mmax);
    double total = 0.0;
    kernels::accumulate<double>(need.size(), 1, &total, [&](size_t idx, double* out) {
      const size_t j = idx / static_cast<size_t>(lv.radial), i = idx % static_cast<size_t>(lv.radial);
      std::vector<double> x, w;
      radial_rule(d, std::norm(zb[j]), lv.radial, x, w);
      const cplx z = std::sqrt(x[i]) * zb[j] / std::abs(zb[j]);
      const size_t stride = static_cast<size_t>(mmax / need[idx]);
      out[0] += dphi[j] * w[i] * interior_potential(cd, d, z, stride) * d.sigma(x[i]);
    });
    // (1/2pi) * (2pi/outer) * sum dphi * (1/2) int phi sigma dx
    const double F = 0.5 * total / lv.outer;
    if (have_prev && std::abs(F - prev) <= tol * std::max(1.0, std::abs(F))) {
      s.value = F;
      s.estimated_error = std::abs(F - prev);
      return s;
    }
    prev = F;
    have_prev = true;
  }
  s.value = prev;
  fail(ErrorCode::ToleranceNotReached, "polar quadrature did not reach the tolerance");
}

}  // namespace dtoda
