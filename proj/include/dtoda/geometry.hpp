#pragma once

#include <complex>
#include <vector>

namespace dtoda {

using cplx = std::complex<double>;

// Closed polygons are given by their vertices; the closing edge is implicit.

int winding_number(const std::vector<cplx>& poly, cplx p);

// True when no two non-adjacent edges intersect (sweep over x-extents).
bool is_simple(const std::vector<cplx>& poly);

double distance_to_segment(cplx p, cplx a, cplx b);
double distance_to_polygon(const std::vector<cplx>& poly, cplx p);

// Symmetric Hausdorff distance between two closed polygons.
double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b);

double diameter(const std::vector<cplx>& poly);

}  // namespace dtoda
