#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "dtoda/geometry.hpp"

namespace dtoda {

// z(w) = r w + sum_{j=0..J} u_j w^{-j}, mapping |w| > 1 onto the domain
// exterior with z(inf) = inf and r > 0.
class ExteriorMap {
 public:
  ExteriorMap() = default;
  ExteriorMap(double r, std::vector<cplx> coeffs);
  // Circle of radius r with J+1 zero coefficients.
  static ExteriorMap circle(double r, int J = 0);

  double conformal_radius() const { return r_; }
  const std::vector<cplx>& coeffs() const { return u_; }
  int truncation() const { return static_cast<int>(u_.size()) - 1; }

  // Checked evaluation; throws InsideDisk for |w| < 1.
  cplx operator()(cplx w) const;
  // Unchecked evaluation, usable anywhere in w != 0.
  cplx eval(cplx w) const;
  cplx derivative(cplx w) const;
  cplx second_derivative(cplx w) const;

  // Coefficients with modulus below the threshold set to zero.
  ExteriorMap pruned(double threshold = 1e-13) const;
  // Pads with zeros or drops trailing coefficients to reach truncation J.
  ExteriorMap with_truncation(int J) const;

 private:
  double r_ = 1.0;
  std::vector<cplx> u_{cplx(0.0)};
};

struct BoundaryCurve {
  std::vector<double> theta;
  std::vector<cplx> samples;
  std::vector<cplx> tangents;  // dz/dtheta
  std::vector<cplx> normals;   // outward unit normals
};

cplx eval_map(const ExteriorMap& m, cplx w);

// Preimage w with |w| >= 1 of an exterior point z.
cplx invert_point(const ExteriorMap& m, cplx z);

// Dirichlet Green's function of the exterior in terms of preimages.
double green_w(cplx wz, cplx wzeta);
double green(const ExteriorMap& m, cplx z, cplx zeta);

// Outward normal derivative in z of G(a, z) at the boundary point z(w), |w| = 1.
double green_normal_derivative(const ExteriorMap& m, cplx wa, cplx w);

bool univalence_check(const ExteriorMap& m, int M);

std::vector<cplx> boundary_samples(const ExteriorMap& m, int M);
BoundaryCurve boundary_curve(const ExteriorMap& m, int M);

// Sample count for contour work on this map: a power of two >= floor.
int default_samples(const ExteriorMap& m, int floor = 256);

// Seeded univalent test map: u_0 = 0 and u_1..u_J uniform in the disk of
// radius scale * r, redrawn until the univalence check passes.
ExteriorMap random_map(std::uint64_t seed, double r, int J, double scale);

}  // namespace dtoda
