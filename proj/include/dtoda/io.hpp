#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/moments.hpp"

namespace dtoda::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "dtoda 0.1.0";

// Complex numbers are [re, im] pairs throughout.
json to_json(cplx z);
cplx complex_from_json(const json& j);

json to_json(const BackgroundDensity& d);
BackgroundDensity density_from_json(const json& j);

json to_json(const ExteriorMap& m);
ExteriorMap map_from_json(const json& j);

json to_json(const MomentVector& mv);
MomentVector moments_from_json(const json& j);

json to_json(const DualMoments& dm);

json read_json(const std::string& path);
// Two-space indentation, sorted keys, trailing newline.
void write_json(const std::string& path, const json& j);
std::string dump(const json& j);

// theta,x,y rows with 17 significant digits.
std::string curve_csv(const BoundaryCurve& c);
void write_text(const std::string& path, const std::string& text);

struct ViewBox {
  double x = -1.0, y = -1.0, width = 2.0, height = 2.0;
};
// Bounding box of all curves with a 5% margin.
ViewBox view_box(const std::vector<std::vector<cplx>>& curves);
// One closed path per curve; y is flipped so the plot has the usual orientation.
std::string curves_svg(const std::vector<std::vector<cplx>>& curves, const ViewBox& box, bool closed = true);

}  // namespace dtoda::io
