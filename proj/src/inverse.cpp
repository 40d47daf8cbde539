#include "dtoda/inverse.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "dtoda/error.hpp"

namespace dtoda {

namespace {

ExteriorMap unpack(const Eigen::VectorXd& p, int n) {
  std::vector<cplx> u(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) u[static_cast<size_t>(j)] = cplx(p(1 + 2 * j), p(2 + 2 * j));
  return ExteriorMap(p(0), std::move(u));
}

Eigen::VectorXd pack(const ExteriorMap& m) {
  const int n = m.truncation() + 1;
  Eigen::VectorXd p(1 + 2 * n);
  p(0) = m.conformal_radius();
  for (int j = 0; j < n; ++j) {
    p(1 + 2 * j) = m.coeffs()[static_cast<size_t>(j)].real();
    p(2 + 2 * j) = m.coeffs()[static_cast<size_t>(j)].imag();
  }
  return p;
}

enum class Validity { Ok, LeftAnnulus, UnivalenceLost };

Validity check_map(const ExteriorMap& m, const BackgroundDensity& d, int M) {
  for (int k = 0; k < M; ++k) {
    const double x = std::norm(m.eval(std::polar(1.0, 2.0 * M_PI * k / M)));
    if (!d.annulus().contains(x)) return Validity::LeftAnnulus;
  }
  if (!univalence_check(m, M)) return Validity::UnivalenceLost;
  return Validity::Ok;
}

Eigen::VectorXd residual_vector(const ExteriorMap& m, const BackgroundDensity& d, const MomentVector& targets, int n,
                                int M) {
  const ContourMoments cm = contour_moments(contour_data(m, d, M), d, n, 0);
  Eigen::VectorXd r(1 + 2 * n);
  r(0) = cm.t.t0 - targets.t0;
  for (int k = 1; k <= n; ++k) {
    const cplx diff = cm.t.t[static_cast<size_t>(k - 1)] - targets.tk(k);
    r(2 * k - 1) = diff.real();
    r(2 * k) = diff.imag();
  }
  return r;
}

// Exact derivative of the trapezoid sums. With I_k = s (z_theta / z) z^-k,
// a coefficient variation dz gives
//   dI_k = (z_theta/z) z^-k (sigma dx - (k+1) s dz/z) + s dz_theta z^-(k+1),
// dx = 2 Re(conj(z) dz). Finite differences lose too much against the
// condition number once the map has a few dozen coefficients.
Eigen::MatrixXd jacobian(const Eigen::VectorXd& p, const BackgroundDensity& d, int n, int M) {
  const ExteriorMap m = unpack(p, n);
  const Eigen::Index cols = p.size();
  Eigen::MatrixXcd A(n + 1, M), B(n + 1, M), X1(M, cols), X2(M, cols), X3(M, cols);
  const cplx I(0.0, 1.0);
  for (int j = 0; j < M; ++j) {
    const cplx w = std::polar(1.0, 2.0 * M_PI * j / M);
    const cplx z = m.eval(w), zt = I * w * m.derivative(w);
    const double x = std::norm(z), s = d.flux(x), sg = d.sigma(x);
    const cplx zi = 1.0 / z;
    cplx a = zt * zi, b = zi;
    for (int k = 0; k <= n; ++k) {
      A(k, j) = a;
      B(k, j) = b;
      a *= zi;
      b *= zi;
    }
    auto column = [&](Eigen::Index c, cplx dz, cplx dzt) {
      X1(j, c) = sg * 2.0 * (std::conj(z) * dz).real();
      X2(j, c) = s * dz * zi;
      X3(j, c) = s * dzt;
    };
    column(0, w, I * w);
    cplx wj = 1.0;  // w^-q
    const cplx wi = 1.0 / w;
    for (int q = 0; q < n; ++q) {
      const cplx dzt = -I * static_cast<double>(q) * wj;
      column(1 + 2 * q, wj, dzt);
      column(2 + 2 * q, I * wj, I * dzt);
      wj *= wi;
    }
  }
  const Eigen::MatrixXcd P1 = A * X1, P2 = A * X2, P3 = B * X3;
  Eigen::MatrixXd J(1 + 2 * n, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (int k = 0; k <= n; ++k) {
      const cplx dI = P1(k, c) - static_cast<double>(k + 1) * P2(k, c) + P3(k, c);
      if (k == 0) {
        J(0, c) = (dI / (I * static_cast<double>(M))).real();
      } else {
        const cplx dt = dI / (I * static_cast<double>(k) * static_cast<double>(M));
        J(2 * k - 1, c) = dt.real();
        J(2 * k, c) = dt.imag();
      }
    }
  }
  return J;
}

// Rows for high k are smaller by about r^-k; equilibrating them lets the
// factorization resolve every moment, not just the leading ones.
Eigen::VectorXd equilibrate(Eigen::MatrixXd& J, Eigen::VectorXd& rhs) {
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(J.rows());
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    const double rn = J.row(i).norm();
    if (rn > 0.0) {
      scale(i) = rn;
      J.row(i) /= rn;
      rhs(i) /= rn;
    }
  }
  return scale;
}

}  // namespace

std::vector<double> moment_residual(const ExteriorMap& m, const BackgroundDensity& d, const MomentVector& targets,
                                    int M) {
  const int n = std::max(targets.order(), m.truncation() + 1);
  const Eigen::VectorXd r = residual_vector(m, d, targets, n, M);
  return std::vector<double>(r.data(), r.data() + r.size());
}

Eigen::MatrixXd moment_jacobian(const ExteriorMap& m, const BackgroundDensity& d, int M) {
  return jacobian(pack(m), d, m.truncation() + 1, M);
}

ExteriorMap cold_start(const BackgroundDensity& d, double t0, int J) {
  return ExteriorMap::circle(std::sqrt(d.radius_sq_for_t0(t0)), J);
}

InverseSolution solve_domain(const InverseProblem& prob) {
  const BackgroundDensity& d = prob.density;
  if (prob.tol < 1e-12) fail(ErrorCode::InvalidParameter, "solver tolerance must be at least 1e-12");
  if (!d.admissible(prob.targets.t0)) {
    std::ostringstream os;
    os.precision(17);
    os << "target t0 = " << prob.targets.t0 << " outside [" << d.t0_min() << ", " << d.t0_max() << "]";
    fail(ErrorCode::OutOfAdmissibleInterval, os.str());
  }
  const int n = std::max(prob.targets.order(), prob.initial.truncation() + 1);
  ExteriorMap map = prob.initial.with_truncation(n - 1);
  int M = prob.samples > 0 ? prob.samples : std::max(256, 16 * n);
  {
    int p = 1;
    while (p < M) p *= 2;
    M = p;
  }
  switch (check_map(map, d, M)) {
    case Validity::LeftAnnulus: fail(ErrorCode::LeftAnnulus, "initial map leaves the annulus");
    case Validity::UnivalenceLost: fail(ErrorCode::UnivalenceLost, "initial map is not univalent");
    case Validity::Ok: break;
  }

  Eigen::VectorXd p = pack(map);
  Eigen::VectorXd res = residual_vector(map, d, prob.targets, n, M);
  double norm = res.norm();
  InverseSolution sol;
  int polish = 0;
  for (int it = 0; it < prob.max_iter; ++it) {
    if (norm <= prob.tol && polish >= 2) break;
    Eigen::MatrixXd Js = jacobian(p, d, n, M);
    Eigen::VectorXd rs = -res;
    equilibrate(Js, rs);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    sol.jacobian_condition = cond;
    if (cond > 1e12) {
      std::ostringstream os;
      os << "moment Jacobian condition number " << cond << " exceeds 1e12";
      fail(ErrorCode::SingularJacobian, os.str());
    }
    const Eigen::VectorXd delta = Js.colPivHouseholderQr().solve(rs);

    double lambda = 1.0;
    bool accepted = false;
    Validity last = Validity::Ok;
    for (int halve = 0; halve < 30; ++halve, lambda *= 0.5) {
      const Eigen::VectorXd q = p + lambda * delta;
      if (!(q(0) > 0.0)) {
        last = Validity::LeftAnnulus;
        continue;
      }
      const ExteriorMap trial = unpack(q, n);
      last = check_map(trial, d, M);
      if (last != Validity::Ok) continue;
      const Eigen::VectorXd rq = residual_vector(trial, d, prob.targets, n, M);
      if (rq.norm() < norm) {
        p = q;
        res = rq;
        accepted = true;
        break;
      }
    }
    sol.iterations = it + 1;
    if (!accepted) {
      if (norm <= prob.tol) break;
      if (last == Validity::LeftAnnulus) fail(ErrorCode::LeftAnnulus, "no damped step keeps the boundary in the annulus");
      if (last == Validity::UnivalenceLost) fail(ErrorCode::UnivalenceLost, "no damped step keeps the map univalent");
      fail(ErrorCode::MaxIterExceeded, "Newton step failed to reduce the moment residual");
    }
    const double previous = norm;
    norm = res.norm();
    if (norm <= prob.tol) {
      ++polish;
      if (norm > 0.5 * previous) break;
      if (norm == 0.0) break;
    }
  }
  if (!(norm <= prob.tol)) {
    std::ostringstream os;
    os << "moment residual " << norm << " above tolerance " << prob.tol << " after " << sol.iterations << " iterations";
    fail(ErrorCode::MaxIterExceeded, os.str());
  }
  sol.map = unpack(p, n);
  sol.residual_norm = norm;
  return sol;
}

ChordSolver::ChordSolver(const ExteriorMap& base, const BackgroundDensity& d, int M)
    : base_(base), d_(d), n_(base.truncation() + 1), M_(M) {
  Eigen::MatrixXd J = jacobian(pack(base_), d_, n_, M_);
  Eigen::VectorXd dummy = Eigen::VectorXd::Zero(J.rows());
  row_scale_ = equilibrate(J, dummy);
  qr_.compute(J);
}

std::optional<ExteriorMap> ChordSolver::solve(const MomentVector& targets, double tol, int max_iter) const {
  Eigen::VectorXd p = pack(base_);
  Eigen::VectorXd res = residual_vector(base_, d_, targets, n_, M_);
  double norm = res.norm();
  // The frozen Jacobian is replaced by a fresh one wherever it stops
  // contracting well; the cylinder family curves strongly in t0.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>* qr = &qr_;
  const Eigen::VectorXd* scale = &row_scale_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> local_qr;
  Eigen::VectorXd local_scale;
  bool fresh = false;
  auto refresh = [&] {
    Eigen::MatrixXd J = jacobian(p, d_, n_, M_);
    Eigen::VectorXd dummy = Eigen::VectorXd::Zero(J.rows());
    local_scale = equilibrate(J, dummy);
    local_qr.compute(J);
    qr = &local_qr;
    scale = &local_scale;
    fresh = true;
  };
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd q = p + qr->solve(Eigen::VectorXd(-res.cwiseQuotient(*scale)));
    double next = INFINITY;
    if (q(0) > 0.0) next = residual_vector(unpack(q, n_), d_, targets, n_, M_).norm();
    if (next < norm) {
      p = q;
      res = residual_vector(unpack(p, n_), d_, targets, n_, M_);
      const double previous = norm;
      norm = next;
      fresh = false;
      if (next < 0.25 * previous) continue;
      if (norm <= tol) break;  // polishing has stalled
      refresh();
    } else {
      if (fresh || norm <= tol) break;
      refresh();
    }
  }
  if (!(norm <= tol)) return std::nullopt;
  ExteriorMap m = unpack(p, n_);
  if (check_map(m, d_, M_) != Validity::Ok) return std::nullopt;
  return m;
}

}  // namespace dtoda
