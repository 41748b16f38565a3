#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqnls/diagnostics.hpp"
#include "cqnls/evolve.hpp"
#include "cqnls/groundstate.hpp"
#include "cqnls/mass_curve.hpp"
#include "cqnls/spectral.hpp"
#include "cqnls/svg.hpp"

namespace cqnls {

/// `count` log-spaced points in [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InvalidArgument("log_spaced: need 0 < lo < hi and count >= 2");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  v.back() = hi;
  return v;
}

inline std::vector<double> default_omega_grid() { return log_spaced(0.005, 0.18, 24); }

struct MassCurveOptions {
  ShootingParams shooting;
  bool spectral_verdicts = true;  // GSS verdict per point after the spectral check
  double slope_tol = 1e-3;
};

/// Shoots every omega; failures are recorded in `errors` and leave NaN masses.
/// In 3D the Weinstein quotient of each profile is returned through `weinstein`.
inline MassCurve mass_curve(int dim, const std::vector<double>& omegas, const MassCurveOptions& opt = {},
                            std::vector<double>* weinstein = nullptr) {
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!(omegas[i] > 0.0) || !(omegas[i] < omega_star()))
      throw InvalidArgument("mass_curve: every omega must satisfy 0<omega<3/16");
    if (i > 0 && !(omegas[i] > omegas[i - 1])) throw InvalidArgument("mass_curve: omegas must be strictly increasing");
  }
  MassCurve c;
  c.dim = dim;
  c.omegas = omegas;
  c.masses.assign(omegas.size(), std::numeric_limits<double>::quiet_NaN());
  c.errors.assign(omegas.size(), "");
  c.verdicts.assign(omegas.size(), Verdict::Inconclusive);
  if (weinstein) weinstein->assign(omegas.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::optional<AssumptionCheck>> checks(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    try {
      const auto p = shoot_radial(omegas[i], dim, opt.shooting);
      c.masses[i] = p.mass;
      if (weinstein && dim == 3) (*weinstein)[i] = weinstein_quotient_3d(p);
      if (opt.spectral_verdicts) checks[i] = check_assumption(p);
    } catch (const Error& e) {
      c.errors[i] = e.kind() + ": " + e.what();
    }
  }
  c.compute_slopes();
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!checks[i] || !std::isfinite(c.slopes[i])) continue;
    if (!checks[i]->passed) {
      c.errors[i] = "AssumptionViolated: " + checks[i]->reason;
      continue;
    }
    if (c.slopes[i] > opt.slope_tol) c.verdicts[i] = Verdict::Stable;
    else if (c.slopes[i] < -opt.slope_tol) c.verdicts[i] = Verdict::Unstable;
  }
  return c;
}

inline std::string mass_curve_csv(const MassCurve& c) {
  std::string s = "omega,mass,slope,verdict,error\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::string err = c.errors[i];
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    s += io::fmt(c.omegas[i]) + "," + io::fmt(c.masses[i]) + "," + io::fmt(c.slopes[i]) + "," +
         to_string(c.verdicts[i]) + "," + err + "\n";
  }
  return s;
}

struct SlopeCheck {
  double fitted_slope = 0.0;  // dM/domega at 0
  double expected = 0.0;
  double relative_error = 0.0;
  int points = 0;
};

/// dM/domega at omega = 0 from the samples with omega <= omega_cut: least-squares line
/// through (omega, (M - M(Q))/omega), intercept taken as the slope. Compared with
/// `coefficient` (defaults to (2/3)||Q||_6^6).
inline SlopeCheck asymptotic_slope_check(const MassCurve& curve, const SolitonProfile& q,
                                         std::optional<double> coefficient = std::nullopt, double omega_cut = 0.02) {
  if (curve.dim != 2 || q.dim != 2) throw DimensionError("asymptotic_slope_check: two-dimensional data only");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve.omegas[i] <= omega_cut * (1 + 1e-12) && std::isfinite(curve.masses[i])) {
      xs.push_back(curve.omegas[i]);
      ys.push_back((curve.masses[i] - q.mass) / curve.omegas[i]);
    }
  if (xs.size() < 4) throw NotEnoughData("asymptotic_slope_check: need at least 4 samples with small omega");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  SlopeCheck r;
  r.fitted_slope = my - sxy / sxx * mx;
  r.expected = coefficient ? *coefficient : 2.0 / 3.0 * q.l6;
  r.relative_error = std::abs(r.fitted_slope - r.expected) / std::abs(r.expected);
  r.points = static_cast<int>(xs.size());
  return r;
}

struct Rho0Estimate {
  double rho0 = 0.0;
  double omega_min = 0.0;
  double rho0_coarse = 0.0;       // parabolic vertex from the sweep alone
  double omega_min_coarse = 0.0;
  double refinement_change = 0.0; // |rho0 - rho0_coarse| / rho0
  double sweep_spacing = 0.0;     // local omega spacing around the minimum
  double weinstein_omega_min = NAN;
  double weinstein_min = NAN;
  double weinstein_mass = NAN;    // mass of the soliton minimizing the quotient
  bool weinstein_agrees = false;  // |weinstein_omega_min - omega_min| <= sweep_spacing
};

namespace detail {

/// Vertex (x, y) of the parabola through three points.
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  const double b = d01 - a * (x0 + x1);
  if (!(a > 0.0)) return {x1, y1};
  const double xv = -b / (2 * a);
  return {xv, y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1)};
}

inline std::size_t argmin_finite(const std::vector<double>& v) {
  std::size_t k = v.size();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i]) && (k == v.size() || v[i] < v[k])) k = i;
  return k;
}

}  // namespace detail

/// Minimum of omega -> M(phi_omega) on a 3D sweep, refined by a local 9-point sweep
/// around the coarse minimum. The soliton minimizing the Weinstein quotient along the
/// same sweep is located for comparison; pass `weinstein` (as filled by mass_curve)
/// to avoid re-shooting the sweep.
inline Rho0Estimate rho0_estimate(const MassCurve& curve, const ShootingParams& params = {},
                                  std::vector<double> weinstein = {}) {
  if (curve.dim != 3) throw DimensionError("rho0_estimate: three-dimensional curve required");
  const std::size_t k = detail::argmin_finite(curve.masses);
  if (k == curve.size()) throw NotEnoughData("rho0_estimate: no valid masses");
  if (k == 0 || k + 1 == curve.size() || !std::isfinite(curve.masses[k - 1]) || !std::isfinite(curve.masses[k + 1]))
    throw BoundaryMinimumWarning("rho0_estimate: the minimum mass lies on the boundary of the sweep");
  Rho0Estimate r;
  auto [xc, yc] = detail::parabola_vertex(curve.omegas[k - 1], curve.masses[k - 1], curve.omegas[k], curve.masses[k],
                                          curve.omegas[k + 1], curve.masses[k + 1]);
  r.omega_min_coarse = xc;
  r.rho0_coarse = yc;
  r.sweep_spacing = 0.5 * (curve.omegas[k + 1] - curve.omegas[k - 1]);

  MassCurveOptions opt;
  opt.shooting = params;
  opt.spectral_verdicts = false;
  std::vector<double> fine(9);
  for (int i = 0; i < 9; ++i) fine[i] = curve.omegas[k - 1] + (curve.omegas[k + 1] - curve.omegas[k - 1]) * i / 8.0;
  const auto local = mass_curve(3, fine, opt);
  const std::size_t j = detail::argmin_finite(local.masses);
  if (j == 0 || j + 1 == local.size())
    throw BoundaryMinimumWarning("rho0_estimate: refined minimum lies on the refinement boundary");
  auto [xf, yf] = detail::parabola_vertex(local.omegas[j - 1], local.masses[j - 1], local.omegas[j], local.masses[j],
                                          local.omegas[j + 1], local.masses[j + 1]);
  r.omega_min = xf;
  r.rho0 = yf;
  r.refinement_change = std::abs(r.rho0 - r.rho0_coarse) / r.rho0;

  if (weinstein.size() != curve.size()) {
    weinstein.assign(curve.size(), NAN);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (!std::isfinite(curve.masses[i])) continue;
      try {
        weinstein[i] = weinstein_quotient_3d(shoot_radial(curve.omegas[i], 3, params));
      } catch (const Error&) {
      }
    }
  }
  const std::size_t w = detail::argmin_finite(weinstein);
  if (w > 0 && w + 1 < weinstein.size() && std::isfinite(weinstein[w - 1]) && std::isfinite(weinstein[w + 1])) {
    auto [xw, yw] = detail::parabola_vertex(curve.omegas[w - 1], weinstein[w - 1], curve.omegas[w], weinstein[w],
                                            curve.omegas[w + 1], weinstein[w + 1]);
    r.weinstein_omega_min = xw;
    r.weinstein_min = yw;
    try {
      r.weinstein_mass = shoot_radial(xw, 3, params).mass;
    } catch (const Error&) {
    }
  } else if (w < weinstein.size()) {
    r.weinstein_omega_min = curve.omegas[w];
    r.weinstein_min = weinstein[w];
    r.weinstein_mass = curve.masses[w];
  }
  r.weinstein_agrees = std::abs(r.weinstein_omega_min - r.omega_min) <= r.sweep_spacing;
  return r;
}

struct PerturbationSpec {
  double delta = 0.01;       // H^1 size relative to ||phi||_{H^1}
  std::uint64_t seed = 1;
  double band = 1.0;         // largest |k| of the random modes
};

/// Seeded band-limited complex field with unit H^1 norm.
inline ComplexField random_perturbation(const UniformGrid& grid, std::uint64_t seed, double band) {
  if (!(band >= 0.0)) throw InvalidArgument("random_perturbation: band must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto k2 = wavenumber_sq(grid);
  std::vector<cplx> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double re = normal(rng), im = normal(rng);
    v[i] = k2[i] <= band * band ? cplx(re, im) : cplx(0.0, 0.0);
  }
  fft::inverse(grid, v);
  ComplexField f(grid, std::move(v));
  const double n = h1_norm(f);
  if (!(n > 0.0)) throw InvalidArgument("random_perturbation: band contains no modes");
  return f.scaled(1.0 / n);
}

/// 64-bit FNV-1a of a string (config hashes in reports).
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ConservationFlags {
  double mass_drift = 0.0;      // max relative deviation
  double energy_drift = 0.0;
  double momentum_drift = 0.0;  // max |P(t) - P(0)| / (|P(0)| + sqrt(M |grad|^2))
  bool mass_ok = false;
  bool energy_ok = false;
};

inline ConservationFlags conservation(const DiagnosticsSeries& s, double mass_tol = 1e-10, double energy_tol = 1e-6) {
  ConservationFlags f;
  const auto m = s.column("mass");
  const auto e = s.column("energy");
  for (std::size_t i = 0; i < m.size(); ++i) {
    f.mass_drift = std::max(f.mass_drift, std::abs(m[i] / m[0] - 1.0));
    f.energy_drift = std::max(f.energy_drift, std::abs(e[i] - e[0]) / std::max(std::abs(e[0]), 1e-300));
  }
  f.mass_ok = f.mass_drift <= mass_tol;
  f.energy_ok = f.energy_drift <= energy_tol;
  return f;
}

struct RunReport {
  std::string config_hash;
  DiagnosticsSeries series;
  nlohmann::json scalars = nlohmann::json::object();
  nlohmann::json flags = nlohmann::json::object();

  nlohmann::json to_json() const { return {{"config_hash", config_hash}, {"scalars", scalars}, {"flags", flags}}; }
};

struct StabilityReport : RunReport {
  double initial_distance = 0.0;
  double max_distance = 0.0;
  double growth_factor = 0.0;
};

/// Evolves phi + delta ||phi||_{H^1} p (p a seeded unit-H^1 perturbation) and tracks the
/// modulated distance to the orbit of phi.
inline StabilityReport stability_run(const SolitonProfile& profile, const UniformGrid& grid,
                                     const PerturbationSpec& pert, EvolveConfig config) {
  const ComplexField phi = to_field(profile, grid);
  ComplexField u0 = phi;
  if (pert.delta != 0.0) {
    const auto p = random_perturbation(grid, pert.seed, pert.band);
    u0 = phi + p.scaled(pert.delta * h1_norm(phi));
  }
  StabilityReport r;
  DiagnosticsSeries::Options opt;
  opt.reference = phi;
  opt.pseudoconformal = false;
  if (grid.dim() == 2) opt.q_mass = std::nullopt;
  evolve(u0, config, {}, [&](const ComplexField& f) { r.series.push(f, opt); });
  const auto d = r.series.column("mod_dist");
  r.initial_distance = d.front();
  r.max_distance = *std::max_element(d.begin(), d.end());
  r.growth_factor = r.initial_distance > 0.0 ? r.max_distance / r.initial_distance : r.max_distance;
  const auto cons = conservation(r.series);
  nlohmann::json cfg = {{"omega", profile.omega},
                        {"dim", profile.dim},
                        {"grid", io::grid_json(grid)},
                        {"evolve", config.to_json(grid)},
                        {"delta", pert.delta},
                        {"seed", pert.seed},
                        {"band", pert.band}};
  r.config_hash = fnv1a_hex(cfg.dump());
  r.scalars = {{"initial_distance", r.initial_distance},
               {"max_distance", r.max_distance},
               {"growth_factor", r.growth_factor},
               {"mass_drift", cons.mass_drift},
               {"energy_drift", cons.energy_drift}};
  r.flags = {{"mass_conserved", cons.mass_ok}, {"energy_conserved", cons.energy_ok}};
  return r;
}

struct InitialSpec {
  enum class Kind { Gaussian, Soliton };
  Kind kind = Kind::Gaussian;
  double mass_factor = 1.0;  // Gaussian mass as a multiple of M(Q)
  double width = 1.0;        // Gaussian exp(-|x|^2 / (2 width^2))
  double omega = 0.05;       // soliton data
};

struct ScatteringReport : RunReport {
  double alpha = 0.0;
  double fit_start = 0.0;
  double fit_end = 0.0;
  bool wrapped = false;  // edge mass exceeded 1e-4 of the total inside the run
  std::vector<double> cauchy_times;
  std::vector<double> cauchy_increments;
  bool increments_decreasing = false;
};

/// Fraction of the mass in the outer strip max_a |x_a| >= (1/2 - strip) L of the box.
inline double boundary_mass_fraction(const ComplexField& f, double strip = 0.1) {
  const auto& g = f.grid();
  const double cut = (0.5 - strip) * g.extent();
  double outer = 0.0, total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    total += w;
    const auto idx = g.unflatten(i);
    bool out = false;
    for (int a = 0; a < g.dim(); ++a) out = out || std::abs(g.coordinate(idx[a])) >= cut;
    if (out) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  const std::size_t n = x.size();
  if (n < 2) throw NotEnoughData("loglog_slope: need at least 2 points");
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

/// 2D dispersion run: fits ||u(t)||_6^6 ~ t^{-alpha} over [T/4, T] (cut at the first sample
/// whose boundary-strip mass exceeds 1e-4 of the total) and measures the H^1 increments of the
/// scattering-state candidates e^{-i t Lap/2} u(t) at t = T/16, T/8, T/4, T/2, T.
inline ScatteringReport scattering_run(const InitialSpec& init, const UniformGrid& grid, EvolveConfig config,
                                       double q_mass) {
  if (grid.dim() != 2) throw DimensionError("scattering_run: two-dimensional grids only");
  ComplexField u0(grid);
  if (init.kind == InitialSpec::Kind::Gaussian) {
    u0 = ComplexField::sample(grid, [&](const std::array<double, 3>& x) {
      return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]) / (init.width * init.width));
    });
    u0 = u0.scaled(std::sqrt(init.mass_factor * q_mass / mass(u0)));
  } else {
    u0 = to_field(shoot_radial(init.omega, 2), grid);
  }
  const double T = config.t_end;
  const std::vector<double> marks = {T / 16, T / 8, T / 4, T / 2, T};
  ScatteringReport r;
  std::vector<ComplexField> states;
  std::vector<double> edge;
  DiagnosticsSeries::Options opt;
  opt.q_mass = q_mass;
  const double dt = config.dt;
  std::size_t next_mark = 0;
  evolve(u0, config, {}, [&](const ComplexField& f) {
    r.series.push(f, opt);
    edge.push_back(boundary_mass_fraction(f));
    while (next_mark < marks.size() && f.time() >= marks[next_mark] - 0.5 * std::abs(dt)) {
      states.push_back(free_propagate(f, -f.time()));
      r.cauchy_times.push_back(f.time());
      ++next_mark;
    }
  });
  r.fit_end = T;
  for (std::size_t i = 0; i < edge.size(); ++i)
    if (edge[i] > 1e-4) {
      r.wrapped = true;
      r.fit_end = r.series.times[i > 0 ? i - 1 : 0];
      break;
    }
  r.fit_start = r.wrapped ? r.fit_end / 4 : T / 4;
  const auto l6 = r.series.column("l6s");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.series.times.size(); ++i) {
    const double t = r.series.times[i];
    if (t >= r.fit_start - 1e-12 && t <= r.fit_end + 1e-12 && t > 0.0 && l6[i] > 0.0) {
      xs.push_back(t);
      ys.push_back(l6[i]);
    }
  }
  r.alpha = xs.size() >= 2 ? -loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < states.size(); ++i) r.cauchy_increments.push_back(h1_norm(states[i] - states[i - 1]));
  r.increments_decreasing = r.cauchy_increments.size() >= 2;
  for (std::size_t i = 1; i < r.cauchy_increments.size(); ++i)
    if (!(r.cauchy_increments[i] < r.cauchy_increments[i - 1])) r.increments_decreasing = false;
  const auto cons = conservation(r.series, 1e-10, 1e-4);
  nlohmann::json cfg = {{"kind", init.kind == InitialSpec::Kind::Gaussian ? "gaussian" : "soliton"},
                        {"mass_factor", init.mass_factor},
                        {"width", init.width},
                        {"omega", init.omega},
                        {"grid", io::grid_json(grid)},
                        {"evolve", config.to_json(grid)}};
  r.config_hash = fnv1a_hex(cfg.dump());
  r.scalars = {{"alpha", r.alpha},
               {"wrapped", r.wrapped},
               {"fit_start", r.fit_start},
               {"fit_end", r.fit_end},
               {"cauchy_times", r.cauchy_times},
               {"cauchy_increments", r.cauchy_increments},
               {"initial_mass_over_MQ", mass(u0) / q_mass},
               {"mass_drift", cons.mass_drift},
               {"energy_drift", cons.energy_drift}};
  r.flags = {{"no_wraparound", !r.wrapped},
             {"increments_decreasing", r.increments_decreasing},
             {"mass_conserved", cons.mass_ok},
             {"energy_conserved", cons.energy_ok}};
  return r;
}

/// Writes config.json, series.csv, report.json (and any SVG charts) into `dir`.
inline void write_run_directory(const std::filesystem::path& dir, const nlohmann::json& config,
                                const std::string& series_csv, const nlohmann::json& report,
                                const std::vector<std::pair<std::string, svg::Chart>>& charts = {}) {
  if (!dir.parent_path().empty() && !std::filesystem::exists(dir.parent_path()))
    throw IoError("output directory parent does not exist: " + dir.parent_path().string());
  std::filesystem::create_directories(dir);
  io::write_text(dir / "config.json", config.dump(2) + "\n");
  io::write_text(dir / "series.csv", series_csv);
  io::write_text(dir / "report.json", report.dump(2) + "\n");
  for (const auto& [name, chart] : charts) io::write_text(dir / name, svg::render(chart));
}

}  // namespace cqnls
