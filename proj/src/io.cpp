#include "dtoda/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtoda/error.hpp"

namespace dtoda::io {

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) fail(ErrorCode::ParseError, std::string("missing number '") + key + "'");
  return j.at(key).get<double>();
}

std::vector<cplx> complex_list(const json& j, const char* key) {
  std::vector<cplx> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) fail(ErrorCode::ParseError, std::string("'") + key + "' must be an array");
  for (const auto& e : j.at(key)) out.push_back(complex_from_json(e));
  return out;
}

json complex_list(const std::vector<cplx>& v) {
  json a = json::array();
  for (cplx z : v) a.push_back(to_json(z));
  return a;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

}  // namespace

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(ErrorCode::ParseError, "complex numbers are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const BackgroundDensity& d) {
  json j;
  j["family"] = to_string(d.family());
  j["r0_sq"] = d.r0_sq();
  j["r1_sq"] = d.r1_sq();
  switch (d.family()) {
    case Family::Homogeneous:
      j["c"] = d.c();
      j["alpha"] = d.alpha();
      break;
    case Family::Cylinder: j["R"] = d.R(); break;
    case Family::General:
      j["C1"] = d.C1();
      j["C0"] = d.C0();
      j["k"] = d.k();
      break;
    case Family::Tabulated: j["U"] = d.table(); break;
  }
  return j;
}

BackgroundDensity density_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    fail(ErrorCode::ParseError, "density needs a 'family' string");
  const std::string f = j.at("family").get<std::string>();
  const double r0 = j.contains("r0_sq") ? number(j, "r0_sq") : 0.0, r1 = number(j, "r1_sq");
  if (f == "homogeneous") return BackgroundDensity::homogeneous(number(j, "c"), number(j, "alpha"), r0, r1);
  if (f == "cylinder") return BackgroundDensity::cylinder(number(j, "R"), r0, r1);
  if (f == "general") return BackgroundDensity::general(number(j, "C1"), number(j, "C0"), number(j, "k"), r0, r1);
  if (f == "tabulated") {
    if (!j.contains("U") || !j.at("U").is_array()) fail(ErrorCode::ParseError, "tabulated density needs 'U'");
    return BackgroundDensity::tabulated(j.at("U").get<std::vector<double>>(), r0, r1);
  }
  fail(ErrorCode::ParseError, "unknown density family '" + f + "'");
}

json to_json(const ExteriorMap& m) { return {{"r", m.conformal_radius()}, {"coeffs", complex_list(m.coeffs())}}; }

ExteriorMap map_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "map must be an object");
  std::vector<cplx> u = complex_list(j, "coeffs");
  if (u.empty()) u.push_back(0.0);
  return ExteriorMap(number(j, "r"), u);
}

json to_json(const MomentVector& mv) { return {{"t0", mv.t0}, {"t", complex_list(mv.t)}}; }

MomentVector moments_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "moments must be an object");
  return MomentVector{number(j, "t0"), complex_list(j, "t")};
}

json to_json(const DualMoments& dm) { return {{"v0", dm.v0}, {"v", complex_list(dm.v)}, {"u0", dm.u0}}; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ParseError, "cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, dump(j)); }

std::string curve_csv(const BoundaryCurve& c) {
  std::string out = "theta,x,y\n";
  for (size_t i = 0; i < c.samples.size(); ++i) {
    const double th = i < c.theta.size() ? c.theta[i] : 0.0;
    out += fmt17(th) + "," + fmt17(c.samples[i].real()) + "," + fmt17(c.samples[i].imag()) + "\n";
  }
  return out;
}

ViewBox view_box(const std::vector<std::vector<cplx>>& curves) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& c : curves)
    for (cplx z : c) {
      x0 = std::min(x0, z.real());
      x1 = std::max(x1, z.real());
      y0 = std::min(y0, z.imag());
      y1 = std::max(y1, z.imag());
    }
  if (!std::isfinite(x0)) return {};
  const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-9});
  return {x0 - pad, -y1 - pad, x1 - x0 + 2 * pad, y1 - y0 + 2 * pad};
}

std::string curves_svg(const std::vector<std::vector<cplx>>& curves, const ViewBox& box, bool closed) {
  std::ostringstream os;
  os.precision(8);
  const double stroke = 0.004 * std::max(box.width, box.height);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << box.x << " " << box.y << " " << box.width << " "
     << box.height << "\">\n";
  for (const auto& c : curves) {
    if (c.empty()) continue;
    os << "<path fill=\"none\" stroke=\"black\" stroke-width=\"" << stroke << "\" d=\"M";
    for (size_t i = 0; i < c.size(); ++i) os << (i ? " L" : "") << c[i].real() << "," << -c[i].imag();
    os << (closed ? " Z" : "") << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dtoda::io
