#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqnls/config.hpp"
#include "cqnls/diagnostics.hpp"
#include "cqnls/evolve.hpp"
#include "cqnls/experiments.hpp"
#include "cqnls/fft.hpp"
#include "cqnls/field_io.hpp"
#include "cqnls/groundstate.hpp"
#include "cqnls/profile_io.hpp"
#include "cqnls/spectral.hpp"
#include "cqnls/svg.hpp"

namespace cqnls::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { Success = 0, Failure = 1, FlagFailure = 2 };

/// What an experiment hands back to dispatch: report body plus acceptance flags.
struct Outcome {
  json report = json::object();
  json flags = json::object();
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

/// Hash of the numerical configuration (output location and thread count excluded).
inline std::string config_hash(const RunConfig& c) {
  json j = c.to_json();
  j["run"].erase("output_dir");
  j["run"].erase("threads");
  return fnv1a_hex(j.dump());
}

inline bool all_true(const json& flags) {
  for (const auto& [k, v] : flags.items())
    if (v.is_boolean() && !v.get<bool>()) return false;
  return true;
}

inline void prepare_output(const fs::path& dir) {
  const fs::path parent = fs::absolute(dir).parent_path();
  if (!fs::is_directory(parent)) throw IoError("output directory parent does not exist: " + parent.string());
  fs::create_directories(dir);
}

inline ComplexField initial_field(const RunConfig& c, const UniformGrid& g) {
  if (c.initial == "soliton") return to_field(shoot_radial(c.omega, c.dim, c.shooting), g);
  const double qm = cubic_ground_state(c.dim, c.shooting).mass;
  auto u = ComplexField::sample(g, [&](const std::array<double, 3>& x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (c.width * c.width));
  });
  return u.scaled(std::sqrt(c.mass_factor * qm / mass(u)));
}

inline std::vector<double> omega_grid(const RunConfig& c) { return log_spaced(c.omega_min, c.omega_max, c.points); }

inline svg::Chart mass_chart(const MassCurve& curve) {
  return {"M(phi_omega), d = " + std::to_string(curve.dim), "omega", "mass", true, true,
          {{"mass", curve.omegas, curve.masses}}};
}

}  // namespace detail

inline Outcome run_groundstate(const RunConfig& c) {
  const auto p = shoot_radial(c.omega, c.dim, c.shooting);
  io::write_text(c.output_dir / "profile.csv", io::profile_csv(p));
  const auto [r1, r2] = pohozaev_residuals(p);
  Outcome o;
  o.report = io::profile_json(p);
  o.report["linf_bound"] = linf_bound(c.omega);
  o.flags = {{"pohozaev", std::abs(r1) < 1e-6 && std::abs(r2) < 1e-6}, {"linf_bound", p.sup_norm <= linf_bound(c.omega)}};
  return o;
}

inline Outcome run_masscurve(const RunConfig& c) {
  MassCurveOptions opt;
  opt.shooting = c.shooting;
  opt.slope_tol = c.slope_tol;
  std::vector<double> wq;
  const auto curve = mass_curve(c.dim, detail::omega_grid(c), opt, c.dim == 3 ? &wq : nullptr);
  io::write_text(c.output_dir / "masses.csv", mass_curve_csv(curve));
  io::write_text(c.output_dir / "mass_curve.svg", svg::render(detail::mass_chart(curve)));
  Outcome o;
  int failed = 0;
  for (const auto& e : curve.errors) failed += e.empty() ? 0 : 1;
  o.report = {{"dim", c.dim}, {"points", curve.size()}, {"failed_points", failed}};
  o.flags["all_points_solved"] = failed == 0;
  if (c.dim == 2) {
    const auto q = cubic_ground_state(2, c.shooting);
    bool above = true;
    for (double m : curve.masses) above = above && std::isfinite(m) && m > q.mass;
    o.report["q_mass"] = q.mass;
    o.flags["masses_above_q"] = above;
    try {
      const auto s = asymptotic_slope_check(curve, q);
      o.report["asymptotic_slope"] = {{"fitted", s.fitted_slope},
                                      {"expected", s.expected},
                                      {"relative_error", s.relative_error},
                                      {"points", s.points}};
      o.flags["asymptotic_slope"] = s.relative_error < 0.05;
    } catch (const NotEnoughData& e) {
      o.report["asymptotic_slope"] = {{"error", e.what()}};
    }
  }
  if (c.dim == 3) {
    try {
      const auto r = rho0_estimate(curve, c.shooting, wq);
      o.report["rho0"] = r.rho0;
      o.report["omega_min"] = r.omega_min;
    } catch (const BoundaryMinimumWarning& e) {
      o.report["rho0_warning"] = e.what();
    }
  }
  return o;
}

inline Outcome run_rho0(const RunConfig& c) {
  MassCurveOptions opt;
  opt.shooting = c.shooting;
  opt.spectral_verdicts = false;
  std::vector<double> wq;
  const auto curve = mass_curve(3, detail::omega_grid(c), opt, &wq);
  io::write_text(c.output_dir / "masses.csv", mass_curve_csv(curve));
  io::write_text(c.output_dir / "mass_curve.svg", svg::render(detail::mass_chart(curve)));
  const auto r = rho0_estimate(curve, c.shooting, wq);
  Outcome o;
  o.report = {{"rho0", r.rho0},
              {"omega_min", r.omega_min},
              {"rho0_coarse", r.rho0_coarse},
              {"omega_min_coarse", r.omega_min_coarse},
              {"refinement_change", r.refinement_change},
              {"sweep_spacing", r.sweep_spacing},
              {"weinstein_omega_min", r.weinstein_omega_min},
              {"weinstein_min", r.weinstein_min},
              {"weinstein_mass", r.weinstein_mass},
              {"weinstein_agrees", r.weinstein_agrees}};
  o.flags = {{"rho0_positive", r.rho0 > 0.0}, {"refinement_stable", r.refinement_change < 5e-3}};
  return o;
}

inline Outcome run_evolve(const RunConfig& c) {
  const auto g = c.grid();
  const auto u0 = detail::initial_field(c, g);
  DiagnosticsSeries series;
  DiagnosticsSeries::Options opt;
  if (c.dim == 2) opt.q_mass = cubic_ground_state(2, c.shooting).mass;
  const auto res = evolve(u0, c.evolve_config(), {}, [&](const ComplexField& f) { series.push(f, opt); });
  series.write_csv(c.output_dir / "series.csv");
  io::write_field(c.output_dir / "final", res.final_state);
  const auto cons = conservation(series);
  Outcome o;
  o.report = {{"mass_drift", cons.mass_drift}, {"energy_drift", cons.energy_drift}, {"samples", series.times.size()}};
  o.flags = {{"mass_conserved", cons.mass_ok}, {"energy_conserved", cons.energy_ok}};
  return o;
}

inline Outcome run_stability(const RunConfig& c) {
  const auto g = c.grid();
  const auto p = shoot_radial(c.omega, c.dim, c.shooting);
  Outcome o;
  json runs = json::array();
  double worst = 0.0;
  bool mass_ok = true, energy_ok = true;
  svg::Chart chart{"modulated distance", "t", "distance", false, true, {}};
  for (int s = 0; s < c.seeds; ++s) {
    PerturbationSpec pert{c.delta, c.seed + static_cast<std::uint64_t>(s), c.band};
    const auto r = stability_run(p, g, pert, c.evolve_config());
    const std::string name = c.seeds == 1 ? "series.csv" : "series_" + std::to_string(pert.seed) + ".csv";
    r.series.write_csv(c.output_dir / name);
    if (s == 0 && c.seeds > 1) r.series.write_csv(c.output_dir / "series.csv");
    chart.series.push_back({"seed " + std::to_string(pert.seed), r.series.times, r.series.column("mod_dist")});
    auto j = r.to_json();
    j["seed"] = pert.seed;
    runs.push_back(j);
    worst = std::max(worst, r.growth_factor);
    mass_ok = mass_ok && r.flags["mass_conserved"].get<bool>();
    energy_ok = energy_ok && r.flags["energy_conserved"].get<bool>();
  }
  io::write_text(c.output_dir / "mod_dist.svg", svg::render(chart));
  o.report = {{"growth_factor", worst}, {"runs", runs}};
  o.flags = {{"mass_conserved", mass_ok}, {"energy_conserved", energy_ok}};
  return o;
}

inline Outcome run_scatter(const RunConfig& c) {
  const auto g = c.grid();
  InitialSpec init;
  init.kind = c.initial == "soliton" ? InitialSpec::Kind::Soliton : InitialSpec::Kind::Gaussian;
  init.mass_factor = c.mass_factor;
  init.width = c.width;
  init.omega = c.omega;
  const double qm = cubic_ground_state(2, c.shooting).mass;
  const auto r = scattering_run(init, g, c.evolve_config(), qm);
  r.series.write_csv(c.output_dir / "series.csv");
  svg::Chart chart{"L6 decay", "t", "||u||_6^6", true, true, {{"l6", r.series.times, r.series.column("l6s")}}};
  io::write_text(c.output_dir / "l6_decay.svg", svg::render(chart));
  Outcome o;
  o.report = r.to_json();
  o.flags = r.flags;
  return o;
}

inline Outcome run_spectrum(const RunConfig& c) {
  const auto p = shoot_radial(c.omega, c.dim, c.shooting);
  const auto check = check_assumption(p, c.zero_tol);
  const auto rep = spectral_report(p, c.eigenvalues, c.zero_tol);
  std::string csv = "operator,ell,index,eigenvalue\n";
  for (const auto& s : rep.sectors)
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
      csv += std::string(s.kind == OperatorKind::L1 ? "L1" : "L2") + "," + std::to_string(s.ell) + "," +
             std::to_string(i) + "," + io::fmt(s.eigenvalues[i]) + "\n";
  io::write_text(c.output_dir / "eigenvalues.csv", csv);
  Outcome o;
  o.report = {{"spectrum", rep.to_json()}, {"assumption", {{"passed", check.passed}, {"reason", check.reason}}}};
  o.flags["assumption"] = check.passed;
  if (c.dim == 3) {
    json d = json::object();
    for (auto conv : {DeltaConvention::Cited, DeltaConvention::Doubled}) {
      const auto t = delta_ode(p, 0.0, conv);
      d[conv == DeltaConvention::Cited ? "cited" : "doubled"] = json{{"diverges_negative", t.diverges_negative},
                                                                       {"sign_change_radius", t.sign_change_radius ? json(*t.sign_change_radius) : json(nullptr)},
                                                                       {"r_end", t.r.back()},
                                                                       {"delta_end", t.delta.back()}};
    }
    o.report["delta_ode"] = d;
  }
  if (check.passed) {
    const double h = std::min(1e-3, 0.25 * std::min(c.omega, omega_star() - c.omega));
    MassCurveOptions opt;
    opt.shooting = c.shooting;
    opt.spectral_verdicts = false;
    const auto local = mass_curve(c.dim, {c.omega - h, c.omega, c.omega + h}, opt);
    const auto v = gss_verdict(local, c.omega, check, c.slope_tol);
    o.report["gss"] = {{"slope", local.slopes[1]}, {"verdict", to_string(v)}};
  }
  return o;
}

/// Runs the configured experiment and writes config.json, report.json and the data files
/// into the output directory. Returns 0, 2 when an acceptance flag is false, 1 on error
/// (with error.json when the directory is usable).
inline int dispatch(const RunConfig& c, std::ostream& log = std::cerr) {
  bool dir_ready = false;
  try {
    validate(c);
    detail::prepare_output(c.output_dir);
    dir_ready = true;
    io::write_text(c.output_dir / "config.json", c.to_json().dump(2) + "\n");
    if (c.threads > 0) fft::set_threads(c.threads);
    Outcome o;
    const auto& e = c.experiment;
    if (e == "groundstate") o = run_groundstate(c);
    else if (e == "masscurve") o = run_masscurve(c);
    else if (e == "rho0") o = run_rho0(c);
    else if (e == "evolve") o = run_evolve(c);
    else if (e == "stability") o = run_stability(c);
    else if (e == "scatter") o = run_scatter(c);
    else o = run_spectrum(c);
    json report = o.report;
    report["flags"] = o.flags;
    report["experiment"] = e;
    report["config_hash"] = detail::config_hash(c);
    report["timestamp"] = detail::utc_timestamp();
    io::write_text(c.output_dir / "report.json", report.dump(2) + "\n");
    const bool ok = detail::all_true(o.flags);
    log << e << ": " << (ok ? "ok" : "acceptance flag failed") << " (" << c.output_dir.string() << ")\n";
    return ok ? Success : FlagFailure;
  } catch (const std::exception& ex) {
    const auto* err = dynamic_cast<const Error*>(&ex);
    const json rec = {{"kind", err ? err->kind() : std::string("std::exception")}, {"message", ex.what()}};
    log << "error: " << rec["kind"].get<std::string>() << ": " << ex.what() << "\n";
    if (dir_ready) {
      try {
        io::write_text(c.output_dir / "error.json", rec.dump(2) + "\n");
      } catch (...) {
      }
    }
    return Failure;
  }
}

}  // namespace cqnls::cli
