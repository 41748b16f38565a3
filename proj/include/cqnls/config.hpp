#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqnls/errors.hpp"
#include "cqnls/evolve.hpp"
#include "cqnls/field_io.hpp"
#include "cqnls/groundstate.hpp"

namespace cqnls {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"groundstate", "masscurve", "evolve", "stability",
                                                 "scatter",     "spectrum",  "rho0"};
  return names;
}

/// Fully resolved run description. Sections of the INI form in brackets.
struct RunConfig {
  // [run]
  std::string experiment;
  int dim = 2;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "run";
  int threads = 0;  // 0: leave to the command line / environment
  // [shooting]
  ShootingParams shooting;
  // [masscurve]
  double omega_min = 0.005;
  double omega_max = 0.18;
  int points = 24;
  double slope_tol = 1e-3;
  // [soliton]
  double omega = 0.05;
  // [grid]; 0 picks a per-dimension default
  int grid_points = 0;
  double extent = 0.0;
  // [evolve]
  double dt = 0.01;
  double t_end = 1.0;
  int stride = 10;
  bool dealias = false;
  // [initial]
  std::string initial = "soliton";  // soliton | gaussian
  double mass_factor = 1.0;          // gaussian mass / M(Q)
  double width = 1.0;
  // [stability]
  double delta = 0.01;
  double band = 1.0;
  int seeds = 1;
  // [spectrum]
  int eigenvalues = 4;
  double zero_tol = 1e-4;

  int resolved_grid_points() const {
    if (grid_points > 0) return grid_points;
    return dim == 1 ? 1024 : dim == 2 ? 256 : 64;
  }
  double resolved_extent() const {
    if (extent > 0.0) return extent;
    return dim == 3 ? 60.0 : 80.0;
  }
  UniformGrid grid() const { return UniformGrid(dim, resolved_extent(), resolved_grid_points()); }
  EvolveConfig evolve_config() const {
    EvolveConfig c;
    c.dt = dt;
    c.t_end = t_end;
    c.callback_stride = stride;
    c.dealias = dealias;
    return c;
  }

  nlohmann::json to_json() const {
    return {{"run",
             {{"experiment", experiment},
              {"dim", dim},
              {"seed", seed},
              {"output_dir", output_dir.string()},
              {"threads", threads}}},
            {"shooting",
             {{"r_max", shooting.r_max},
              {"n", shooting.n},
              {"bisection_tol", shooting.bisection_tol},
              {"max_bisections", shooting.max_bisections},
              {"decay_threshold", shooting.decay_threshold},
              {"rtol", shooting.rtol},
              {"atol", shooting.atol}}},
            {"masscurve", {{"omega_min", omega_min}, {"omega_max", omega_max}, {"points", points}, {"slope_tol", slope_tol}}},
            {"soliton", {{"omega", omega}}},
            {"grid", {{"points", resolved_grid_points()}, {"extent", resolved_extent()}}},
            {"evolve", {{"dt", dt}, {"t_end", t_end}, {"stride", stride}, {"dealias", dealias}}},
            {"initial", {{"kind", initial}, {"mass_factor", mass_factor}, {"width", width}}},
            {"stability", {{"delta", delta}, {"band", band}, {"seeds", seeds}}},
            {"spectrum", {{"eigenvalues", eigenvalues}, {"zero_tol", zero_tol}}}};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct ParseContext {
  std::string source;
  int line = 0;
  std::string key;
  std::string where() const {
    std::string w = source.empty() ? "" : source + ":";
    if (line > 0) w += std::to_string(line) + ": ";
    return w + "key '" + key + "'";
  }
};

inline double to_double(const std::string& v, const ParseContext& ctx) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigParseError(ctx.where() + ": expected a number, got '" + v + "'");
  return x;
}

inline long long to_integer(const std::string& v, const ParseContext& ctx) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw ConfigParseError(ctx.where() + ": expected an integer, got '" + v + "'");
  return x;
}

inline std::uint64_t to_unsigned(const std::string& v, const ParseContext& ctx) {
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw ConfigParseError(ctx.where() + ": expected a non-negative integer, got '" + v + "'");
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0') throw ConfigParseError(ctx.where() + ": expected a non-negative integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& v, const ParseContext& ctx) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigParseError(ctx.where() + ": expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const ParseContext&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [](double RunConfig::*m) {
      return [m](RunConfig& c, const std::string& v, const ParseContext& x) { c.*m = to_double(v, x); };
    };
    auto integer = [](int RunConfig::*m) {
      return [m](RunConfig& c, const std::string& v, const ParseContext& x) {
        c.*m = static_cast<int>(to_integer(v, x));
      };
    };
    t["run.experiment"] = [](RunConfig& c, const std::string& v, const ParseContext&) { c.experiment = v; };
    t["run.dim"] = integer(&RunConfig::dim);
    t["run.seed"] = [](RunConfig& c, const std::string& v, const ParseContext& x) { c.seed = to_unsigned(v, x); };
    t["run.output_dir"] = [](RunConfig& c, const std::string& v, const ParseContext&) { c.output_dir = v; };
    t["run.threads"] = integer(&RunConfig::threads);
    t["shooting.r_max"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.r_max = to_double(v, x);
    };
    t["shooting.n"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.n = static_cast<int>(to_integer(v, x));
    };
    t["shooting.bisection_tol"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.bisection_tol = to_double(v, x);
    };
    t["shooting.max_bisections"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.max_bisections = static_cast<int>(to_integer(v, x));
    };
    t["shooting.decay_threshold"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.decay_threshold = to_double(v, x);
    };
    t["shooting.rtol"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.rtol = to_double(v, x);
    };
    t["shooting.atol"] = [](RunConfig& c, const std::string& v, const ParseContext& x) {
      c.shooting.atol = to_double(v, x);
    };
    t["masscurve.omega_min"] = num(&RunConfig::omega_min);
    t["masscurve.omega_max"] = num(&RunConfig::omega_max);
    t["masscurve.points"] = integer(&RunConfig::points);
    t["masscurve.slope_tol"] = num(&RunConfig::slope_tol);
    t["soliton.omega"] = num(&RunConfig::omega);
    t["grid.points"] = integer(&RunConfig::grid_points);
    t["grid.extent"] = num(&RunConfig::extent);
    t["evolve.dt"] = num(&RunConfig::dt);
    t["evolve.t_end"] = num(&RunConfig::t_end);
    t["evolve.stride"] = integer(&RunConfig::stride);
    t["evolve.dealias"] = [](RunConfig& c, const std::string& v, const ParseContext& x) { c.dealias = to_bool(v, x); };
    t["initial.kind"] = [](RunConfig& c, const std::string& v, const ParseContext&) { c.initial = v; };
    t["initial.mass_factor"] = num(&RunConfig::mass_factor);
    t["initial.width"] = num(&RunConfig::width);
    t["stability.delta"] = num(&RunConfig::delta);
    t["stability.band"] = num(&RunConfig::band);
    t["stability.seeds"] = integer(&RunConfig::seeds);
    t["spectrum.eigenvalues"] = integer(&RunConfig::eigenvalues);
    t["spectrum.zero_tol"] = num(&RunConfig::zero_tol);
    return t;
  }();
  return table;
}

inline void assign(RunConfig& c, const std::string& full_key, const std::string& value, const ParseContext& ctx) {
  const auto& t = setters();
  const auto it = t.find(full_key);
  if (it == t.end()) throw ConfigParseError(ctx.where() + ": unknown key");
  it->second(c, value, ctx);
}

}  // namespace detail

/// Parses INI text into `base`. Keys before the first section belong to [run].
/// Comments start with '#' or ';'. Unknown or duplicate keys are parse errors.
inline RunConfig parse_config_text(const std::string& text, const std::string& source = "", RunConfig base = {}) {
  std::istringstream in(text);
  std::string raw, section = "run";
  std::set<std::string> seen;
  detail::ParseContext ctx{source, 0, ""};
  while (std::getline(in, raw)) {
    ++ctx.line;
    const auto cut = raw.find_first_of("#;");
    const std::string line = detail::trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigParseError(source + ":" + std::to_string(ctx.line) + ": malformed section header '" + line + "'");
      section = detail::trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [k, s] : detail::setters()) known = known || k.rfind(section + ".", 0) == 0;
      if (!known) throw ConfigParseError(source + ":" + std::to_string(ctx.line) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError(source + ":" + std::to_string(ctx.line) + ": expected key = value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    ctx.key = section + "." + key;
    if (key.empty()) throw ConfigParseError(ctx.where() + ": empty key");
    if (!seen.insert(ctx.key).second) throw ConfigParseError(ctx.where() + ": duplicate key");
    detail::assign(base, ctx.key, value, ctx);
  }
  return base;
}

inline RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string(), std::move(base));
}

/// Applies a "section.key=value" override (command-line form).
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  detail::ParseContext ctx{"override", 0, detail::trim(assignment.substr(0, eq))};
  if (eq == std::string::npos) throw ConfigParseError("override '" + assignment + "': expected section.key=value");
  std::string key = ctx.key;
  if (key.find('.') == std::string::npos) key = "run." + key;
  ctx.key = key;
  detail::assign(c, key, detail::trim(assignment.substr(eq + 1)), ctx);
}

/// Checks every parameter against the preconditions of the module it feeds.
inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigValidationError(m); };
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    fail("run.experiment = '" + c.experiment + "' is not one of groundstate, masscurve, evolve, stability, scatter, "
         "spectrum, rho0");
  if (c.dim < 1 || c.dim > 3) fail("run.dim = " + std::to_string(c.dim) + " violates 1<=dim<=3");
  if (c.threads < 0) fail("run.threads must be >= 0");
  try {
    c.shooting.validate();
  } catch (const InvalidArgument& e) {
    fail(std::string("shooting: ") + e.what());
  }
  const double ws = omega_star();
  auto in_window = [&](double w, const char* key) {
    if (!(w > 0.0 && w < ws)) fail(std::string(key) + " = " + io::fmt(w) + " violates 0<ω<3/16");
  };
  const auto& e = c.experiment;
  if (e == "masscurve" || e == "rho0") {
    in_window(c.omega_min, "masscurve.omega_min");
    in_window(c.omega_max, "masscurve.omega_max");
    if (!(c.omega_max > c.omega_min)) fail("masscurve.omega_max must exceed masscurve.omega_min");
    if (c.points < 3) fail("masscurve.points must be >= 3");
    if (!(c.slope_tol >= 0.0)) fail("masscurve.slope_tol must be >= 0");
  }
  if (e == "rho0" && c.dim != 3) fail("rho0 requires run.dim = 3");
  if (e == "scatter" && c.dim != 2) fail("scatter requires run.dim = 2");
  const bool uses_soliton = e == "groundstate" || e == "stability" || e == "spectrum" ||
                            ((e == "evolve" || e == "scatter") && c.initial == "soliton");
  if (uses_soliton) in_window(c.omega, "soliton.omega");
  if (e == "evolve" || e == "stability" || e == "scatter") {
    const int n = c.resolved_grid_points();
    if (!UniformGrid::fft_friendly(n))
      fail("grid.points = " + std::to_string(n) + " must be even, >= 8 and have no prime factor above 5");
    if (!(c.resolved_extent() > 0.0)) fail("grid.extent must be positive");
    if ((c.resolved_extent() / n) * n != c.resolved_extent())
      fail("grid.extent / grid.points must be exactly representable");
    if (!(c.dt > 0.0)) fail("evolve.dt must be positive");
    if (!(c.t_end > 0.0)) fail("evolve.t_end must be positive");
    const double q = c.t_end / c.dt;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) fail("evolve.t_end must be an integer multiple of evolve.dt");
    if (c.stride < 1) fail("evolve.stride must be >= 1");
  }
  if (e == "evolve" || e == "scatter") {
    if (c.initial != "soliton" && c.initial != "gaussian") fail("initial.kind must be soliton or gaussian");
    if (c.initial == "gaussian") {
      if (!(c.mass_factor > 0.0)) fail("initial.mass_factor must be positive");
      if (!(c.width > 0.0)) fail("initial.width must be positive");
      if (c.dim == 1) fail("gaussian initial data is normalized against M(Q) and needs run.dim = 2 or 3");
    }
  }
  if (e == "stability") {
    if (!(c.delta >= 0.0)) fail("stability.delta must be >= 0");
    if (!(c.band > 0.0)) fail("stability.band must be positive");
    if (c.seeds < 1) fail("stability.seeds must be >= 1");
  }
  if (e == "spectrum") {
    if (c.eigenvalues < 1) fail("spectrum.eigenvalues must be >= 1");
    if (!(c.zero_tol >= 0.0)) fail("spectrum.zero_tol must be >= 0");
  }
}

}  // namespace cqnls
