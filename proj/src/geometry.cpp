#include "dtoda/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dtoda {

int winding_number(const std::vector<cplx>& poly, cplx p) {
  double total = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const cplx a = poly[i] - p, b = poly[(i + 1) % n] - p;
    total += std::arg(b / a);
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

namespace {

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool segments_cross(cplx p1, cplx p2, cplx p3, cplx p4) {
  const double d1 = cross(p4 - p3, p1 - p3), d2 = cross(p4 - p3, p2 - p3);
  const double d3 = cross(p2 - p1, p3 - p1), d4 = cross(p2 - p1, p4 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

bool is_simple(const std::vector<cplx>& poly) {
  const size_t n = poly.size();
  if (n < 4) return true;
  struct Seg {
    double xmin, xmax;
    size_t i;
  };
  std::vector<Seg> segs(n);
  for (size_t i = 0; i < n; ++i) {
    const cplx a = poly[i], b = poly[(i + 1) % n];
    segs[i] = {std::min(a.real(), b.real()), std::max(a.real(), b.real()), i};
  }
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.xmin < b.xmin; });
  std::vector<Seg> active;
  for (const Seg& s : segs) {
    active.erase(std::remove_if(active.begin(), active.end(), [&](const Seg& a) { return a.xmax < s.xmin; }),
                 active.end());
    for (const Seg& a : active) {
      const size_t gap = a.i > s.i ? a.i - s.i : s.i - a.i;
      if (gap <= 1 || gap == n - 1) continue;
      if (segments_cross(poly[s.i], poly[(s.i + 1) % n], poly[a.i], poly[(a.i + 1) % n])) return false;
    }
    active.push_back(s);
  }
  return true;
}

double distance_to_segment(cplx p, cplx a, cplx b) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  double t = len2 > 0.0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

double distance_to_polygon(const std::vector<cplx>& poly, cplx p) {
  double best = INFINITY;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
  return best;
}

double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double h = 0.0;
  for (cplx p : a) h = std::max(h, distance_to_polygon(b, p));
  for (cplx p : b) h = std::max(h, distance_to_polygon(a, p));
  return h;
}

double diameter(const std::vector<cplx>& poly) {
  double d = 0.0;
  for (size_t i = 0; i < poly.size(); ++i)
    for (size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, std::abs(poly[i] - poly[j]));
  return d;
}

}  // namespace dtoda
