#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cqnls/experiments.hpp"

using namespace cqnls;

namespace {

const SolitonProfile& townes() {
  static const auto q = cubic_ground_state(2);
  return q;
}

MassCurveOptions no_verdicts() {
  MassCurveOptions o;
  o.spectral_verdicts = false;
  return o;
}

struct Sweep3d {
  MassCurve curve;
  std::vector<double> weinstein;
};

const Sweep3d& sweep_3d() {
  static const Sweep3d s = [] {
    Sweep3d r;
    r.curve = mass_curve(3, default_omega_grid(), no_verdicts(), &r.weinstein);
    return r;
  }();
  return s;
}

// log-log slope of the free 2D Gaussian ||u||_6^6 = c (1 + t^2)^{-2} over [a, b]
double free_gaussian_alpha(double a, double b) {
  std::vector<double> t, y;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(a + (b - a) * i / 200.0);
    y.push_back(std::pow(1 + t.back() * t.back(), -2.0));
  }
  return -loglog_slope(t, y);
}

}  // namespace

TEST(OmegaGrid, LogSpacedDefaults) {
  const auto w = default_omega_grid();
  ASSERT_EQ(w.size(), 24u);
  EXPECT_NEAR(w.front(), 0.005, 1e-15);
  EXPECT_NEAR(w.back(), 0.18, 1e-15);
  for (std::size_t i = 2; i < w.size(); ++i) EXPECT_NEAR(w[i] / w[i - 1], w[1] / w[0], 1e-12);
}

TEST(MassCurve, TwoDimensionalAboveTownesAndConverging) {
  const auto c = mass_curve(2, default_omega_grid());
  const double mq = townes().mass;
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_TRUE(c.errors[i].empty()) << c.errors[i];
    EXPECT_GT(c.masses[i], mq);
  }
  EXPECT_LT(c.masses[0] - mq, 0.2);
  EXPECT_LT(c.masses[0] - mq, c.masses[1] - mq);
  EXPECT_EQ(c.verdicts.front(), Verdict::Stable);
  EXPECT_EQ(c.verdicts.back(), Verdict::Stable);
  const auto csv = mass_curve_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "omega,mass,slope,verdict,error");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 25);
}

TEST(MassCurve, ThreeDimensionalShape) {
  const auto& c = sweep_3d().curve;
  EXPECT_LT(c.slopes.front(), 0.0);
  EXPECT_GT(c.slopes.back(), 0.0);
  // sqrt(omega) M tends to M(Q3D); the correction is O(sqrt(omega)) and shrinks along the sweep
  const double mq3 = cubic_ground_state(3).mass;
  const double e0 = std::sqrt(c.omegas[0]) * c.masses[0] / mq3 - 1;
  const double e1 = std::sqrt(c.omegas[1]) * c.masses[1] / mq3 - 1;
  EXPECT_GT(e0, 0.0);
  EXPECT_LT(e0, e1);
}

TEST(MassCurve, RejectsBadGridAndRecordsFailures) {
  EXPECT_THROW(mass_curve(2, {0.1, 0.2}), InvalidArgument);
  EXPECT_THROW(mass_curve(2, {0.1, 0.05}), InvalidArgument);
  auto opt = no_verdicts();
  opt.shooting.max_bisections = 3;
  const auto c = mass_curve(2, {0.05, 0.1, 0.15}, opt);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_TRUE(std::isnan(c.masses[i]));
    EXPECT_EQ(c.errors[i].rfind("ConvergenceFailure", 0), 0u) << c.errors[i];
  }
}

TEST(SlopeCheck, MatchesCoefficientAndRejectsWrongOne) {
  const auto c = mass_curve(2, {0.005, 0.01, 0.015, 0.02}, no_verdicts());
  const auto s = asymptotic_slope_check(c, townes());
  EXPECT_EQ(s.points, 4);
  EXPECT_NEAR(s.expected, (1 - 2.0 / 6) * townes().l6, 1e-14);
  EXPECT_LT(s.relative_error, 0.05);
  const auto wrong = asymptotic_slope_check(c, townes(), townes().l6);
  EXPECT_GT(wrong.relative_error, 0.3);
}

TEST(SlopeCheck, Guards) {
  const auto c = mass_curve(2, {0.005, 0.01, 0.015}, no_verdicts());
  EXPECT_THROW(asymptotic_slope_check(c, townes()), NotEnoughData);
  EXPECT_THROW(asymptotic_slope_check(sweep_3d().curve, townes()), DimensionError);
}

TEST(Rho0, InteriorPositiveAndRefinementStable) {
  const auto& s = sweep_3d();
  const auto r = rho0_estimate(s.curve, {}, s.weinstein);
  EXPECT_GT(r.rho0, 0.0);
  EXPECT_GT(r.omega_min, s.curve.omegas.front());
  EXPECT_LT(r.omega_min, s.curve.omegas.back());
  EXPECT_LT(r.refinement_change, 0.005);
  for (double m : s.curve.masses) EXPECT_GE(m, r.rho0 * (1 - 1e-6));
}

TEST(Rho0, WeinsteinMinimumIsTheZeroEnergySoliton) {
  const auto& s = sweep_3d();
  const auto r = rho0_estimate(s.curve, {}, s.weinstein);
  const auto p = shoot_radial(r.weinstein_omega_min, 3);
  EXPECT_LT(std::abs(p.energy) / p.action, 0.01);
  // smallest mass with E <= 0 from the scaling argument
  const double m = std::pow(4.0 / 3 * std::pow(2.0, 0.25) * r.weinstein_min, 2);
  EXPECT_NEAR(r.weinstein_mass / m, 1.0, 0.01);
  const auto again = rho0_estimate(s.curve);
  EXPECT_NEAR(again.weinstein_omega_min, r.weinstein_omega_min, 1e-12);
}

TEST(Rho0, BoundaryAndDimensionGuards) {
  const auto c = mass_curve(3, {0.1, 0.12, 0.14, 0.16}, no_verdicts());
  EXPECT_THROW(rho0_estimate(c), BoundaryMinimumWarning);
  EXPECT_THROW(rho0_estimate(mass_curve(2, {0.05, 0.1, 0.15}, no_verdicts())), DimensionError);
}

TEST(Perturbation, UnitH1AndSeeded) {
  UniformGrid g(2, 40.0, 64);
  const auto a = random_perturbation(g, 3, 1.0), b = random_perturbation(g, 3, 1.0), c = random_perturbation(g, 4, 1.0);
  EXPECT_NEAR(h1_norm(a), 1.0, 1e-12);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_GT(h1_norm(a - c), 0.1);
  const auto k2 = wavenumber_sq(g);
  const auto spec = spectrum(a);
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (k2[i] > 1.0) {
      EXPECT_LT(std::abs(spec[i]), 1e-12);
    }
  EXPECT_THROW(random_perturbation(g, 1, -1.0), InvalidArgument);
}

TEST(Hash, Fnv1aVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Conservation, FlagsFromSeries) {
  UniformGrid g(1, 20.0, 64);
  const auto u = ComplexField::sample(g, [](const auto& x) { return std::exp(-x[0] * x[0]); });
  DiagnosticsSeries s;
  s.push(u, {});
  s.push(u.scaled(1 + 1e-9).with_time(1.0), {});
  const auto f = conservation(s);
  EXPECT_NEAR(f.mass_drift, 2e-9, 1e-12);
  EXPECT_FALSE(f.mass_ok);
  EXPECT_TRUE(conservation(s, 1e-8, 1e-6).mass_ok);
}

TEST(Stability, ExactSolitonStaysOnOrbit) {
  const auto p = shoot_radial(0.12, 1);
  UniformGrid g(1, 80.0, 1024);
  PerturbationSpec pert;
  pert.delta = 0.0;
  EvolveConfig c;
  c.dt = 1e-3;
  c.t_end = 5.0;
  c.callback_stride = 500;
  const auto r = stability_run(p, g, pert, c);
  EXPECT_LT(r.max_distance, 1e-4);
  EXPECT_TRUE(r.flags["mass_conserved"].get<bool>());
  EXPECT_TRUE(r.flags["energy_conserved"].get<bool>());
}

TEST(Stability, OneDimensionalPerturbationStaysSmall) {
  const auto p = shoot_radial(0.12, 1);
  UniformGrid g(1, 80.0, 1024);
  EvolveConfig c;
  c.dt = 1e-3;
  c.t_end = 10.0;
  c.callback_stride = 500;
  const auto r = stability_run(p, g, {}, c);
  const double plain = 0.01 * h1_norm(to_field(p, g));
  EXPECT_LE(r.initial_distance, plain + 1e-12);
  EXPECT_GT(r.initial_distance, 0.9 * plain);
  EXPECT_LT(r.growth_factor, 10.0);
}

TEST(Stability, DeterministicPerSeed) {
  const auto p = shoot_radial(0.1, 2);
  UniformGrid g(2, 60.0, 64);
  EvolveConfig c;
  c.dt = 0.02;
  c.t_end = 0.4;
  c.callback_stride = 5;
  PerturbationSpec a, b;
  b.seed = 2;
  const auto r1 = stability_run(p, g, a, c), r2 = stability_run(p, g, a, c), r3 = stability_run(p, g, b, c);
  EXPECT_EQ(r1.config_hash, r2.config_hash);
  EXPECT_EQ(r1.series.to_csv(), r2.series.to_csv());
  EXPECT_NE(r1.config_hash, r3.config_hash);
  EXPECT_NE(r1.max_distance, r3.max_distance);
  EXPECT_EQ(r1.to_json()["config_hash"], r1.config_hash);
}

TEST(Scattering, SubcriticalGaussianDisperses) {
  UniformGrid g(2, 128.0, 256);
  EvolveConfig c;
  c.dt = 0.01;
  c.t_end = 16.0;
  c.callback_stride = 25;
  InitialSpec s;
  s.mass_factor = 0.9;
  const auto r = scattering_run(s, g, c, townes().mass);
  EXPECT_GE(r.alpha, 1.8);
  const double free_alpha = free_gaussian_alpha(r.fit_start, r.fit_end);
  EXPECT_NEAR(r.alpha / free_alpha, 1.0, 0.15);
  EXPECT_TRUE(r.flags["mass_conserved"].get<bool>());
  EXPECT_TRUE(r.flags["energy_conserved"].get<bool>());
  EXPECT_NEAR(r.scalars["initial_mass_over_MQ"].get<double>(), 0.9, 1e-12);
  ASSERT_EQ(r.cauchy_increments.size(), 4u);
  EXPECT_LT(r.cauchy_increments[3], r.cauchy_increments[1]);
}

TEST(Scattering, SolitonDoesNotDecay) {
  UniformGrid g(2, 128.0, 256);
  EvolveConfig c;
  c.dt = 0.01;
  c.t_end = 16.0;
  c.callback_stride = 50;
  InitialSpec s;
  s.kind = InitialSpec::Kind::Soliton;
  s.omega = 0.05;
  const auto r = scattering_run(s, g, c, townes().mass);
  EXPECT_LT(r.alpha, 0.2);
  EXPECT_FALSE(r.wrapped);
  EXPECT_GT(r.scalars["initial_mass_over_MQ"].get<double>(), 1.0);
}

TEST(Scattering, WrapAroundTruncatesWindow) {
  UniformGrid g(2, 32.0, 64);
  EvolveConfig c;
  c.dt = 0.02;
  c.t_end = 16.0;
  c.callback_stride = 10;
  const auto r = scattering_run({}, g, c, townes().mass);
  EXPECT_TRUE(r.wrapped);
  EXPECT_FALSE(r.flags["no_wraparound"].get<bool>());
  EXPECT_LT(r.fit_end, 16.0);
  EXPECT_NEAR(r.fit_start, r.fit_end / 4, 1e-12);
  EXPECT_THROW(scattering_run({}, UniformGrid(1, 32.0, 64), c, townes().mass), DimensionError);
}

TEST(Scattering, HelperFunctions) {
  std::vector<double> x = {1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3 * std::pow(v, -2.5));
  EXPECT_NEAR(loglog_slope(x, y), -2.5, 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), NotEnoughData);
  UniformGrid g(2, 40.0, 64);
  EXPECT_LT(boundary_mass_fraction(ComplexField::sample(g, [](const auto& p) { return std::exp(-(p[0] * p[0] + p[1] * p[1])); })), 1e-30);
  EXPECT_NEAR(boundary_mass_fraction(ComplexField::sample(g, [](const auto&) { return 1.0; })), 1 - std::pow(51.0 / 64, 2), 1e-12);  // 13 of 64 nodes per axis have |x| >= 16
}

TEST(RunDirectory, WritesFilesAndChecksParent) {
  const auto base = std::filesystem::temp_directory_path() / "cqnls_rundir";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  write_run_directory(base / "run", {{"a", 1}}, "t\n0\n", {{"ok", true}});
  for (const char* f : {"config.json", "series.csv", "report.json"}) EXPECT_TRUE(std::filesystem::exists(base / "run" / f));
  EXPECT_THROW(write_run_directory(base / "missing" / "run", {}, "", {}), IoError);
  std::filesystem::remove_all(base);
}
