#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cqnls/diagnostics.hpp"
#include "cqnls/groundstate.hpp"
#include "cqnls/profile_io.hpp"
#include "oracles.hpp"

using namespace cqnls;

TEST(OmegaStar, IsThreeSixteenths) { EXPECT_NEAR(omega_star(), 0.1875, 1e-12); }

TEST(OmegaStar, MaximizerFromGoldenSection) {
  auto h = [](double m) { return m / 2 - m * m / 3; };
  const double m_star = oracle::golden_max(h, 0.0, 2.0);
  EXPECT_NEAR(m_star, 0.75, 1e-7);
  EXPECT_NEAR(std::sqrt(m_star), std::sqrt(3.0) / 2, 1e-7);
  EXPECT_NEAR(h(m_star) - omega_star(), 0.0, 1e-13);
}

TEST(ClosedForm, ValuesAtOrigin) {
  EXPECT_NEAR(soliton_1d_closed_form(3.0 / 16, 0.0), std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(soliton_1d_closed_form(0.12, 0.0), 2 * std::sqrt(0.12 / 1.6), 1e-12);
  EXPECT_NEAR(soliton_1d_closed_form(0.12, 0.0), 0.5477226, 1e-7);
}

TEST(ClosedForm, EvenDecayingAndPeaked) {
  for (double w : {0.02, 0.1, 0.18}) {
    for (double x : {0.3, 2.0, 7.5}) {
      EXPECT_EQ(soliton_1d_closed_form(w, x), soliton_1d_closed_form(w, -x));
      EXPECT_LT(soliton_1d_closed_form(w, x), soliton_1d_closed_form(w, 0.0));
    }
    EXPECT_LT(soliton_1d_closed_form(w, 1e3), 1e-12);
    EXPECT_EQ(soliton_1d_closed_form(w, 1e6), 0.0);
  }
}

TEST(ClosedForm, RejectsOmegaOutsideWindow) {
  EXPECT_THROW(soliton_1d_closed_form(0.0, 0.0), OmegaOutOfRange);
  EXPECT_THROW(soliton_1d_closed_form(-0.1, 0.0), OmegaOutOfRange);
  EXPECT_THROW(soliton_1d_closed_form(0.2, 0.0), OmegaOutOfRange);
}

TEST(LinfBound, Values) {
  EXPECT_NEAR(linf_bound(3.0 / 16), std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(linf_bound(0.1), std::sqrt((1 + std::sqrt(0.6)) / 2), 1e-12);
  EXPECT_NEAR(linf_bound(0.1), 0.9420, 1e-4);
  EXPECT_NEAR(linf_bound(1e-12), 1.0, 1e-11);
  EXPECT_THROW(linf_bound(0.26), OmegaOutOfRange);
}

TEST(ShootRadial, MatchesClosedFormInOneDimension) {
  for (double w : {0.02, 0.05, 0.1, 0.12, 0.15, 0.18}) {
    const auto p = shoot_radial(w, 1);
    double err = 0;
    for (int j = 0; j < p.grid.size(); ++j)
      err = std::max(err, std::abs(p.values[j] - soliton_1d_closed_form(w, p.grid.node(j))));
    EXPECT_LT(err, 1e-8) << "omega = " << w;
  }
}

TEST(ShootRadial, NoSolitonOutsideWindow) {
  for (int d = 1; d <= 3; ++d)
    for (double w : {0.1875, 0.2, 0.0, -0.05}) EXPECT_THROW(shoot_radial(w, d), NoSoliton) << d << " " << w;
  EXPECT_THROW(shoot_radial(0.1, 4), InvalidArgument);
}

TEST(ShootRadial, TwoDimensionalMassExceedsTownes) {
  const auto q = cubic_ground_state(2);
  EXPECT_GT(shoot_radial(0.05, 2).mass, q.mass);
}

TEST(ShootRadial, ProfileInvariants) {
  for (int d = 1; d <= 3; ++d)
    for (double w : {0.01, 0.05, 0.12, 0.18}) {
      const auto p = shoot_radial(w, d);
      for (int j = 1; j < p.grid.size(); ++j) {
        EXPECT_LE(p.values[j], p.values[j - 1] + 1e-14);
        if (p.values[j] < 1e-300) break;
        EXPECT_GT(p.values[j], 0.0);
      }
      EXPECT_LE(p.sup_norm, linf_bound(w) + 1e-8);
      EXPECT_NEAR(p.action, p.energy + w * p.mass, 1e-10 * std::abs(p.action));
      EXPECT_GT(p.action, 0.0);
      EXPECT_NEAR(p.decay_rate, std::sqrt(2 * w), 0.1 * std::sqrt(2 * w));
      const auto [r1, r2] = pohozaev_residuals(p);
      EXPECT_LT(std::abs(r1), 1e-6);
      EXPECT_LT(std::abs(r2), 1e-6);
    }
}

TEST(ShootRadial, ValidatesParameters) {
  ShootingParams bad;
  bad.n = 4;
  EXPECT_THROW(shoot_radial(0.1, 1, bad), InvalidArgument);
  ShootingParams starved;
  starved.max_bisections = 3;
  EXPECT_THROW(shoot_radial(0.1, 2, starved), ConvergenceFailure);
}

TEST(CubicGroundState, TownesMassAndResolution) {
  const auto q = cubic_ground_state(2);
  EXPECT_NEAR(q.mass, 5.85, 0.01);
  EXPECT_EQ(q.quintic, 0.0);
  EXPECT_EQ(q.omega, 1.0);
  ShootingParams fine;
  fine.n = 2 * fine.n - 1;
  EXPECT_NEAR(cubic_ground_state(2, fine).mass, q.mass, 1e-8);
  EXPECT_EQ(q.values[0], q.sup_norm);
  EXPECT_EQ(q.derivs[0], 0.0);
  EXPECT_THROW(cubic_ground_state(1), InvalidArgument);
}

TEST(CubicGroundState, SharpGagliardoNirenberg) {
  const auto q = cubic_ground_state(2);
  EXPECT_NEAR(q.l4 * q.mass / (q.mass * q.grad_sq), 1.0, 1e-6);
  UniformGrid g(2, 40.0, 256);
  EXPECT_NEAR(gn_ratio(to_field(q, g), q.mass), 1.0, 1e-6);
}

TEST(CubicGroundState, ThreeDimensional) {
  const auto q = cubic_ground_state(3);
  EXPECT_GT(q.mass, 0.0);
  const auto [r1, r2] = pohozaev_residuals(q);
  EXPECT_LT(std::abs(r1), 1e-6);
  EXPECT_LT(std::abs(r2), 1e-6);
}

TEST(Pohozaev, ClosedFormProfileIsExact) {
  const double w = 0.12;
  RadialGrid grid(60.0, 12001);
  std::vector<double> v(grid.size()), dv(grid.size());
  const double c = std::sqrt(1 - 16 * w / 3), k = 2 * std::sqrt(2 * w);
  for (int j = 0; j < grid.size(); ++j) {
    const double x = grid.node(j);
    v[j] = soliton_1d_closed_form(w, x);
    dv[j] = -0.5 * v[j] * c * k * std::sinh(k * x) / (1 + c * std::cosh(k * x));
  }
  const auto p = SolitonProfile::from_samples(w, 1, 1.0, grid, v, dv);
  const auto [r1, r2] = pohozaev_residuals(p);
  EXPECT_LT(std::abs(r1), 1e-8);
  EXPECT_LT(std::abs(r2), 1e-8);
}

TEST(Pohozaev, GaussianIsNotASolution) {
  RadialGrid grid(30.0, 3001);
  std::vector<double> v(grid.size());
  for (int j = 0; j < grid.size(); ++j) v[j] = 0.6 * std::exp(-grid.node(j) * grid.node(j) / 8);
  const auto p = SolitonProfile::from_samples(0.1, 2, 1.0, grid, v);
  const auto [r1, r2] = pohozaev_residuals(p);
  EXPECT_GT(std::max(std::abs(r1), std::abs(r2)), 1e-2);
}

TEST(Pohozaev, ThreeDimensionalShootingCertificate) {
  const auto [r1, r2] = pohozaev_residuals(shoot_radial(0.1, 3));
  EXPECT_LT(std::abs(r1), 1e-6);
  EXPECT_LT(std::abs(r2), 1e-6);
}

TEST(EnergyScaling, TwoDimensionalDilation) {
  UniformGrid g(2, 40.0, 256);
  auto f = [](double x, double y) { return std::exp(-(x * x + 2 * y * y) / 4) * (1 + 0.3 * x); };
  const auto u = ComplexField::sample(g, [&](const auto& x) { return f(x[0], x[1]); });
  const double G = gradient_norm_sq(u), P4 = lp_power(u, 4), P6 = lp_power(u, 6);
  for (double lam : {0.7, 1.3}) {
    const auto ul = ComplexField::sample(g, [&](const auto& x) { return lam * f(lam * x[0], lam * x[1]); });
    const double expected = lam * lam / 2 * (G - P4 + 2.0 / 3 * lam * lam * P6);
    EXPECT_NEAR(energy(ul), expected, 1e-8 * std::abs(expected));
  }
}

TEST(ToField, SamplesRadially) {
  const auto p = shoot_radial(0.1, 2);
  UniformGrid g(2, 40.0, 64);
  const auto u = to_field(p, g);
  for (std::size_t i = 0; i < u.size(); i += 97) EXPECT_NEAR(u[i].real(), p.value_at(std::sqrt(g.radius_sq(i))), 1e-15);
  EXPECT_THROW(to_field(p, UniformGrid(3, 40.0, 16)), DimensionError);
}

TEST(ProfileIo, CsvAndMetadata) {
  const auto p = shoot_radial(0.1, 1);
  const auto csv = io::profile_csv(p);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,phi");
  const auto j = io::profile_json(p);
  for (const char* key : {"omega", "dim", "mass", "energy", "action", "sup_norm", "decay_rate", "residuals"})
    EXPECT_TRUE(j.contains(key)) << key;
  const auto stem = std::filesystem::temp_directory_path() / "cqnls_profile";
  io::write_profile(stem, p);
  EXPECT_TRUE(std::filesystem::exists(stem.string() + ".csv"));
  EXPECT_TRUE(std::filesystem::exists(stem.string() + ".json"));
}
