#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtoda/conformal.hpp"
#include "dtoda/density.hpp"
#include "dtoda/error.hpp"
#include "dtoda/growth.hpp"
#include "dtoda/identities.hpp"
#include "dtoda/inverse.hpp"
#include "dtoda/io.hpp"
#include "dtoda/kernels.hpp"
#include "dtoda/moments.hpp"
#include "dtoda/tau.hpp"

namespace fs = std::filesystem;
using namespace dtoda;
using io::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitVerifyFailed = 2;

struct Options {
  std::string command;
  std::string density_path, map_path, init_path, moments_path, targets_path, base_path;
  std::string output_dir = ".";
  std::string method;
  std::string suite = "all";
  std::vector<std::string> points;
  int order = 8;
  int samples = 0;
  int random_J = -1;
  double random_radius = 1.0;
  double random_scale = 0.2;
  std::uint64_t seed = 0;
  double dt = 0.01;
  int steps = 10;
  int refit_J = 16;
  bool heun = false;
  double cfl = 0.1;
  bool svg = false;
  double tol = 0.0;
  int max_iter = 50;
  std::string scheme = "central2";
  double step_t0 = 0.0, step_tk = 0.0;
  double alpha = 0.0, R = 0.0, r0 = 0.0;
};

[[noreturn]] void usage_error(const std::string& what) { fail(ErrorCode::InvalidParameter, what); }

// Random maps are drawn only when no map file is given.
bool has_map_source(const std::string& path, const Options& o) { return !path.empty() || o.random_J >= 0; }

ExteriorMap load_map(const std::string& path, const Options& o, const char* flag) {
  if (!path.empty()) return io::map_from_json(io::read_json(path));
  if (o.random_J >= 0) return random_map(o.seed, o.random_radius, o.random_J, o.random_scale);
  usage_error(std::string(flag) + " or --random is required");
}

BackgroundDensity load_density(const Options& o) {
  if (o.density_path.empty()) usage_error("--density is required");
  return io::density_from_json(io::read_json(o.density_path));
}

int resolved_samples(const Options& o, const ExteriorMap& m) { return o.samples > 0 ? o.samples : default_samples(m); }

json base_config(const Options& o) {
  json c;
  c["command"] = o.command;
  c["output_dir"] = o.output_dir;
  c["seed"] = o.seed;
  c["threads"] = kernels::thread_count();
  auto path = [&](const char* key, const std::string& p) {
    if (!p.empty()) c[key] = p;
  };
  path("density_path", o.density_path);
  path("map_path", o.map_path);
  path("init_path", o.init_path);
  path("moments_path", o.moments_path);
  path("targets_path", o.targets_path);
  path("base_path", o.base_path);
  if (o.random_J >= 0) c["random"] = {{"J", o.random_J}, {"r", o.random_radius}, {"scale", o.random_scale}};
  return c;
}

json document(const json& config) { return {{"version", io::kVersion}, {"config", config}}; }

void emit(const json& j) { std::cout << io::dump(j); }

fs::path output_path(const Options& o, const std::string& name) {
  fs::create_directories(o.output_dir);
  return fs::path(o.output_dir) / name;
}

std::string numbered(const char* stem, int n, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, n, ext);
  return buf;
}

cplx parse_point(const std::string& s) {
  double re = 0.0, im = 0.0;
  char comma = 0, extra = 0;
  std::istringstream is(s);
  if (!(is >> re >> comma >> im) || comma != ',' || (is >> extra))
    fail(ErrorCode::ParseError, "points are given as re,im (got '" + s + "')");
  return {re, im};
}

// ---- moments ---------------------------------------------------------------

int run_moments(const Options& o) {
  const BackgroundDensity d = load_density(o);
  const ExteriorMap m = load_map(o.map_path, o, "--map");
  const int M = resolved_samples(o, m);
  const MomentVector mv = forward_moments(m, d, o.order, M);
  const DualMoments dm = dual_moments(m, d, o.order, M);

  json cfg = base_config(o);
  cfg["density"] = io::to_json(d);
  cfg["map"] = io::to_json(m);
  cfg["N"] = o.order;
  cfg["M"] = M;
  json out = document(cfg);
  out.update(io::to_json(mv));
  out.update(io::to_json(dm));
  emit(out);
  return 0;
}

// ---- tau -------------------------------------------------------------------

int run_tau(const Options& o) {
  const BackgroundDensity d = load_density(o);
  const std::string method = o.method.empty() ? "all" : o.method;
  const std::vector<std::string> known = {"all", "double_integral", "moment_identity", "closed_form"};
  if (std::find(known.begin(), known.end(), method) == known.end()) usage_error("unknown tau method '" + method + "'");

  json cfg = base_config(o);
  cfg["density"] = io::to_json(d);
  cfg["method"] = method;

  // The domain comes from a map or is solved from moments.
  ExteriorMap m;
  MomentVector mv;
  if (!o.moments_path.empty()) {
    mv = io::moments_from_json(io::read_json(o.moments_path));
    const int J = std::max(mv.order() - 1, 0);
    InverseProblem p{mv, d, o.init_path.empty() ? cold_start(d, mv.t0, J) : io::map_from_json(io::read_json(o.init_path))};
    if (o.samples > 0) p.samples = o.samples;
    m = solve_domain(p).map;
  } else {
    m = load_map(o.map_path, o, "--map or --moments");
  }
  const int N = std::max({o.order, mv.order(), m.truncation() + 1});
  const int M = resolved_samples(o, m);
  mv = forward_moments(m, d, N, M);
  const DualMoments dm = dual_moments(m, d, 2 * N, M);
  const double tol = o.tol > 0.0 ? o.tol : 1e-8;
  cfg["map"] = io::to_json(m);
  cfg["N"] = N;
  cfg["M"] = M;
  cfg["tol"] = tol;

  json results = json::object(), skipped = json::array();
  auto put = [&](const TauSample& s) {
    results[to_string(s.method)] = {{"value", s.value}, {"estimated_error", s.estimated_error}};
  };
  const bool all = method == "all";
  if (all || method == "closed_form") {
    if (mv.on_t0_line(1e-12) && d.family() != Family::Tabulated)
      put(tau_t0_closed(d, mv.t0));
    else if (all)
      skipped.push_back({{"method", "closed_form"}, {"reason", "domain is off the t0-line or the family has no closed form"}});
    else
      fail(ErrorCode::UnsupportedFamily, "closed form needs a t0-line domain and an analytic family");
  }
  if (all || method == "double_integral") put(tau_double_integral(m, d, tol));
  if (all || method == "moment_identity") put(tau_via_moments(mv, dm, d, m, M));

  json out = document(cfg);
  out["moments"] = io::to_json(mv);
  out["results"] = results;
  out["skipped"] = skipped;
  emit(out);
  return 0;
}

// ---- invert ----------------------------------------------------------------

int run_invert(const Options& o) {
  const BackgroundDensity d = load_density(o);
  if (o.targets_path.empty()) usage_error("--targets is required");
  const MomentVector targets = io::moments_from_json(io::read_json(o.targets_path));
  const int J = std::max(targets.order() - 1, 0);
  InverseProblem p{targets, d, o.init_path.empty() ? cold_start(d, targets.t0, J) : io::map_from_json(io::read_json(o.init_path))};
  p.max_iter = o.max_iter;
  if (o.tol > 0.0) p.tol = o.tol;
  p.samples = o.samples;
  const InverseSolution sol = solve_domain(p);

  json cfg = base_config(o);
  cfg["density"] = io::to_json(d);
  cfg["targets"] = io::to_json(targets);
  cfg["initial"] = io::to_json(p.initial);
  cfg["tol"] = p.tol;
  cfg["max_iter"] = p.max_iter;
  cfg["M"] = p.samples;
  json out = document(cfg);
  out.update(io::to_json(sol.map));
  out["diagnostics"] = {{"residual_norm", sol.residual_norm},
                        {"iterations", sol.iterations},
                        {"jacobian_condition", sol.jacobian_condition}};
  io::write_json(output_path(o, "map.json").string(), out);
  emit(out);
  return 0;
}

// ---- grow ------------------------------------------------------------------

int run_grow(const Options& o) {
  const BackgroundDensity d = load_density(o);
  const ExteriorMap m0 = load_map(o.init_path, o, "--init");
  if (o.steps < 0) usage_error("--steps must be >= 0");
  const std::string method = o.method.empty() ? "moment" : o.method;

  Trajectory tr;
  json cfg = base_config(o);
  cfg["density"] = io::to_json(d);
  cfg["init"] = io::to_json(m0);
  cfg["method"] = method;
  cfg["dt"] = o.dt;
  cfg["steps"] = o.steps;
  if (method == "moment") {
    const GrowthState s0 = growth_state(m0, d, 0);
    tr = grow_moment_driven(s0, d, o.dt, o.steps);
  } else if (method == "front") {
    FrontTrackingOptions fo;
    fo.refit_J = o.refit_J;
    fo.heun = o.heun;
    fo.cfl = o.cfl;
    cfg["refit_J"] = fo.refit_J;
    cfg["heun"] = fo.heun;
    cfg["cfl"] = fo.cfl;
    tr = grow_front_tracking(m0, d, o.dt, o.steps, fo);
  } else {
    usage_error("--method is moment or front");
  }
  const int M = o.samples > 0 ? o.samples : 256;
  cfg["M"] = M;
  cfg["svg"] = o.svg;

  std::vector<std::vector<cplx>> curves;
  json steps = json::array();
  for (size_t n = 0; n < tr.states.size(); ++n) {
    const GrowthState& s = tr.states[n];
    const int idx = static_cast<int>(n);
    const BoundaryCurve c = boundary_curve(s.map, M);
    double drift = 0.0;
    for (double x : tr.drift_report[n]) drift = std::max(drift, x);
    json step = document(cfg);
    step["step"] = idx;
    step["t0"] = s.t0;
    step["max_drift"] = drift;
    step["map"] = io::to_json(s.map);
    io::write_json(output_path(o, numbered("step", idx, "json")).string(), step);
    io::write_text(output_path(o, numbered("step", idx, "csv")).string(), io::curve_csv(c));
    curves.push_back(c.samples);
    steps.push_back({{"step", idx}, {"t0", s.t0}, {"max_drift", drift}});
  }
  if (o.svg) {
    // One viewBox for the whole run so frames can be compared.
    const io::ViewBox box = io::view_box(curves);
    for (size_t n = 0; n < curves.size(); ++n)
      io::write_text(output_path(o, numbered("frame", static_cast<int>(n), "svg")).string(),
                     io::curves_svg({curves[n]}, box));
  }
  json out = document(cfg);
  out["method"] = to_string(tr.method);
  out["substeps"] = tr.substeps;
  out["max_drift"] = tr.max_drift();
  out["steps"] = steps;
  io::write_json(output_path(o, "trajectory.json").string(), out);
  emit(out);
  return 0;
}

// ---- verify ----------------------------------------------------------------

std::vector<std::string> split_suites(const std::string& s) {
  if (s == "all") return suite_names();
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) usage_error("--suite is empty");
  return out;
}

int run_verify(const Options& o) {
  const BackgroundDensity d = load_density(o);
  SuiteRequest req;
  req.suites = split_suites(o.suite);
  json cfg = base_config(o);
  cfg["density"] = io::to_json(d);
  if (!o.base_path.empty()) {
    req.base = io::moments_from_json(io::read_json(o.base_path));
  } else if (has_map_source(o.map_path, o)) {
    const ExteriorMap m = load_map(o.map_path, o, "--map");
    req.base = forward_moments(m, d, m.truncation() + 1, resolved_samples(o, m));
    cfg["map"] = io::to_json(m);
  } else {
    usage_error("--base, --map or --random is required");
  }
  for (const auto& p : o.points) req.points.push_back(parse_point(p));
  req.options.tolerance = o.tol;
  req.options.step_t0 = o.step_t0;
  req.options.step_tk = o.step_tk;
  if (o.scheme == "central2")
    req.options.scheme = Scheme::Central2;
  else if (o.scheme == "central4")
    req.options.scheme = Scheme::Central4;
  else
    usage_error("--scheme is central2 or central4");

  cfg["suites"] = req.suites;
  cfg["base"] = io::to_json(req.base);
  json pts = json::array();
  for (cplx z : req.points) pts.push_back(io::to_json(z));
  cfg["points"] = pts;
  cfg["tolerance"] = o.tol;
  cfg["scheme"] = o.scheme;
  cfg["step_t0"] = o.step_t0;
  cfg["step_tk"] = o.step_tk;

  const std::vector<IdentityReport> reports = run_suite(req, d);
  json out = json::array();
  bool ok = true;
  for (const IdentityReport& r : reports) {
    json j = to_json(r);
    j["configuration"]["run"] = cfg;
    j["configuration"]["version"] = io::kVersion;
    out.push_back(std::move(j));
    ok = ok && r.passed;
  }
  emit(out);
  return ok ? 0 : kExitVerifyFailed;
}

// ---- cone / cylinder -------------------------------------------------------

int run_transform(const Options& o, bool cone) {
  const ExteriorMap m = load_map(o.map_path, o, "--map");
  std::optional<BackgroundDensity> d;
  if (!o.density_path.empty()) d = load_density(o);
  json cfg = base_config(o);
  if (d) cfg["density"] = io::to_json(*d);
  cfg["map"] = io::to_json(m);
  const int M = o.samples > 0 ? o.samples : 256;
  cfg["M"] = M;
  const BoundaryCurve c = boundary_curve(m, M);
  BoundaryCurve img;
  if (cone) {
    double alpha = o.alpha;
    if (alpha == 0.0 && d && d->family() == Family::Homogeneous) alpha = d->alpha();
    if (alpha == 0.0) usage_error("--alpha or a homogeneous --density is required");
    cfg["alpha"] = alpha;
    img = map_to_cone(c, alpha);
  } else {
    double R = o.R, r0 = o.r0;
    if (d && d->family() == Family::Cylinder) {
      if (R == 0.0) R = d->R();
      if (r0 == 0.0) r0 = std::sqrt(d->r0_sq());
    }
    if (R == 0.0 || r0 == 0.0) usage_error("--R and --r0 or a cylinder --density are required");
    cfg["R"] = R;
    cfg["r0"] = r0;
    img = map_to_cylinder(c, R, r0);
  }
  cfg["svg"] = o.svg;
  const std::string stem = cone ? "cone" : "cylinder";
  io::write_text(output_path(o, stem + ".csv").string(), io::curve_csv(img));
  if (o.svg)
    io::write_text(output_path(o, stem + ".svg").string(),
                   io::curves_svg({img.samples}, io::view_box({img.samples}), cone));
  json out = document(cfg);
  json pts = json::array();
  for (cplx z : img.samples) pts.push_back(io::to_json(z));
  out["curve"] = {{"theta", img.theta}, {"points", pts}};
  emit(out);
  return 0;
}

void print_error(const char* code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads();
  Options o;
  CLI::App app{"Dispersionless Toda tools for plane domains in radial backgrounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kVersion);

  auto common = [&](CLI::App* s) {
    s->add_option("--density", o.density_path, "background density JSON");
    s->add_option("--output-dir", o.output_dir, "directory for written artifacts");
    s->add_option("--seed", o.seed, "seed for --random maps");
    s->add_option("--random", o.random_J, "use a seeded random map with this truncation J");
    s->add_option("--random-radius", o.random_radius, "conformal radius of the random map");
    s->add_option("--random-scale", o.random_scale, "coefficient bound of the random map, relative to r");
    s->add_option("-M,--samples", o.samples, "contour samples (0 picks automatically)");
  };

  auto* moments = app.add_subcommand("moments", "harmonic and dual moments of a map");
  common(moments);
  moments->add_option("--map", o.map_path, "exterior map JSON");
  moments->add_option("-N,--order", o.order, "number of moments")->check(CLI::PositiveNumber);

  auto* tau = app.add_subcommand("tau", "tau function by every applicable method");
  common(tau);
  tau->add_option("--moments", o.moments_path, "moments JSON; the domain is solved from it");
  tau->add_option("--map", o.map_path, "exterior map JSON");
  tau->add_option("--init", o.init_path, "initial map for the moment solve");
  tau->add_option("--method", o.method, "all, double_integral, moment_identity or closed_form");
  tau->add_option("-N,--order", o.order, "moment order for the identity method");
  tau->add_option("--tol", o.tol, "tolerance for the double integral");

  auto* invert = app.add_subcommand("invert", "map from prescribed moments");
  common(invert);
  invert->add_option("--targets", o.targets_path, "target moments JSON");
  invert->add_option("--init", o.init_path, "initial map JSON");
  invert->add_option("--tol", o.tol, "residual tolerance");
  invert->add_option("--max-iter", o.max_iter, "Newton iteration limit");

  auto* grow = app.add_subcommand("grow", "Laplacian growth");
  common(grow);
  grow->add_option("--init", o.init_path, "initial map JSON");
  grow->add_option("--method", o.method, "moment or front");
  grow->add_option("--dt", o.dt, "t0 increment per step");
  grow->add_option("--steps", o.steps, "number of steps");
  grow->add_option("--refit-J", o.refit_J, "map truncation for front tracking");
  grow->add_flag("--heun", o.heun, "second-order front tracking");
  grow->add_option("--cfl", o.cfl, "front tracking CFL number");
  grow->add_flag("--svg", o.svg, "write one SVG frame per step");

  auto* verify = app.add_subcommand("verify", "identity checks");
  common(verify);
  verify->add_option("--suite", o.suite, "all or a comma-separated list");
  verify->add_option("--base", o.base_path, "base moments JSON");
  verify->add_option("--map", o.map_path, "base map JSON");
  verify->add_option("--point", o.points, "exterior point re,im (repeatable)");
  verify->add_option("--tol", o.tol, "tolerance override (0 uses the error budget)");
  verify->add_option("--scheme", o.scheme, "central2 or central4");
  verify->add_option("--step-t0", o.step_t0, "relative step in t0");
  verify->add_option("--step-tk", o.step_tk, "relative step in t_k");

  auto* cone = app.add_subcommand("cone", "boundary image on the cone Z = z^alpha");
  common(cone);
  cone->add_option("--map", o.map_path, "exterior map JSON");
  cone->add_option("--alpha", o.alpha, "cone exponent (default from the density)");
  cone->add_flag("--svg", o.svg, "write an SVG");

  auto* cylinder = app.add_subcommand("cylinder", "boundary image on the cylinder Z = R log(z / r0)");
  common(cylinder);
  cylinder->add_option("--map", o.map_path, "exterior map JSON");
  cylinder->add_option("--R", o.R, "cylinder radius (default from the density)");
  cylinder->add_option("--r0", o.r0, "inner radius (default from the density)");
  cylinder->add_flag("--svg", o.svg, "write an SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("ParseError", e.what());
    return kExitError;
  }

  try {
    o.command = app.get_subcommands().front()->get_name();
    if (o.command == "moments") return run_moments(o);
    if (o.command == "tau") return run_tau(o);
    if (o.command == "invert") return run_invert(o);
    if (o.command == "grow") return run_grow(o);
    if (o.command == "verify") return run_verify(o);
    if (o.command == "cone") return run_transform(o, true);
    return run_transform(o, false);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    print_error("ParseError", e.what());
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
  }
  return kExitError;
}
