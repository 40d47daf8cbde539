#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dtoda/error.hpp"
#include "dtoda/identities.hpp"
#include "dtoda/io.hpp"

using namespace dtoda;
using io::json;

TEST_CASE("densities round trip") {
  const BackgroundDensity ds[] = {BackgroundDensity::homogeneous(0.8, 1.5, 0.2, 50.0),
                                  BackgroundDensity::cylinder(1.3, 0.6, 60.0),
                                  BackgroundDensity::general(0.7, 0.8, 4, 0.5, 60.0),
                                  BackgroundDensity::tabulated({0.0, 0.3, 1.0, 2.2, 3.9, 6.1}, 0.5, 8.0)};
  for (const auto& d : ds) {
    const json j = io::to_json(d);
    const BackgroundDensity e = io::density_from_json(json::parse(io::dump(j)));
    CHECK(io::to_json(e) == j);
    for (double x : {0.6, 1.0, 3.0}) CHECK(e.sigma(x) == d.sigma(x));
  }
  CHECK(io::density_from_json(json{{"family", "homogeneous"}, {"c", 1}, {"alpha", 1}, {"r1_sq", 10}}).r0_sq() == 0.0);
}

TEST_CASE("maps and moments round trip") {
  const ExteriorMap m(1.2, {{0.0, 0.0}, {0.1, -0.05}, {0.0, 0.02}});
  const ExteriorMap m2 = io::map_from_json(json::parse(io::dump(io::to_json(m))));
  CHECK(m2.conformal_radius() == m.conformal_radius());
  CHECK(m2.coeffs() == m.coeffs());
  const MomentVector t{1.5, {{0.1, 0.2}, {-0.3, 0.0}}};
  const MomentVector t2 = io::moments_from_json(io::to_json(t));
  CHECK(t2.t0 == t.t0);
  CHECK(t2.t == t.t);
  CHECK(io::complex_from_json(json(2.5)) == cplx(2.5, 0.0));
}

TEST_CASE("malformed input is a parse error") {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidParameter;
  };
  CHECK(code([] { io::density_from_json(json{{"family", "square"}, {"r1_sq", 1}}); }) == ErrorCode::ParseError);
  CHECK(code([] { io::density_from_json(json::array()); }) == ErrorCode::ParseError);
  CHECK(code([] { io::complex_from_json(json{1, 2, 3}); }) == ErrorCode::ParseError);
  CHECK(code([] { io::moments_from_json(json{{"t", json::array()}}); }) == ErrorCode::ParseError);
  CHECK(code([] { io::read_json("/nonexistent/x.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("files, csv and svg") {
  const auto dir = std::filesystem::temp_directory_path() / "dtoda_test_io";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.json").string();
  io::write_json(path, json{{"b", 1}, {"a", 2}});
  const json back = io::read_json(path);
  CHECK(back["a"] == 2);
  CHECK(io::dump(back).find("\"a\"") < io::dump(back).find("\"b\""));

  const BoundaryCurve c = boundary_curve(ExteriorMap::circle(2.0), 8);
  const std::string csv = io::curve_csv(c);
  CHECK(csv.rfind("theta,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(csv.find("2.0000000000000000e+00") != std::string::npos);

  const io::ViewBox box = io::view_box({c.samples});
  CHECK(box.x == doctest::Approx(-2.2));
  CHECK(box.width == doctest::Approx(4.4));
  const std::string svg = io::curves_svg({c.samples}, box);
  CHECK(svg.find("viewBox=\"-2.2 -2.2 4.4 4.4\"") != std::string::npos);
  CHECK(svg.find(" Z\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("identity reports serialize") {
  IdentityReport r;
  r.name = "x";
  r.residual = 1e-5;
  r.tolerance = 1e-3;
  r.passed = true;
  r.configuration = {{"k", 1}};
  const json j = to_json(r);
  CHECK(j["name"] == "x");
  CHECK(j["passed"] == true);
  CHECK(j["configuration"]["k"] == 1);
}
