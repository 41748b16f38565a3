#include <gtest/gtest.h>

#include <cmath>

#include "cqnls/groundstate.hpp"
#include "cqnls/minimizer.hpp"

using namespace cqnls;

namespace {

const SolitonProfile& townes() {
  static const auto q = cubic_ground_state(2);
  return q;
}

const UniformGrid& grid2d() {
  static const UniformGrid g(2, 80.0, 256);
  return g;
}

}  // namespace

TEST(Minimizer, AboveCriticalMassReachesNegativeEnergy) {
  const double rho = 1.2 * townes().mass;
  const auto r = minimize_energy_on_sphere(rho, grid2d());
  EXPECT_LT(r.energy, 0.0);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_GT(r.omega, 0.0);
  EXPECT_LT(r.omega, omega_star());
  EXPECT_NEAR(mass(r.field), rho, 1e-10 * rho);
  EXPECT_NEAR(energy(r.field), r.energy, 1e-12);
  const auto p = shoot_radial(r.omega, 2);
  EXPECT_NEAR(p.mass / rho, 1.0, 0.01);
}

TEST(Minimizer, BelowCriticalMassHasNoMinimizer) {
  const double rho = 0.9 * townes().mass;
  EXPECT_THROW(minimize_energy_on_sphere(rho, grid2d()), NoNegativeEnergyMinimizer);
  FlowParams gf;
  gf.method = FlowParams::Method::GradientFlow;
  EXPECT_THROW(minimize_energy_on_sphere(rho, grid2d(), gf), NoNegativeEnergyMinimizer);
}

TEST(Minimizer, SymmetryShiftedSeedGivesSameEnergy) {
  const double rho = 1.2 * townes().mass;
  const auto r = minimize_energy_on_sphere(rho, grid2d());
  FlowParams fp;
  fp.seed = translated(r.field, std::vector<double>{1.5, -2.25}).scaled(std::polar(1.0, 0.7));
  const auto r2 = minimize_energy_on_sphere(rho, grid2d(), fp);
  EXPECT_NEAR(r2.energy, r.energy, 1e-8);
}

TEST(Minimizer, RecoveredFrequencyIncreasesWithMass) {
  double prev = 0.0;
  for (double f : {1.05, 1.5, 3.0}) {
    const auto r = minimize_energy_on_sphere(f * townes().mass, grid2d());
    EXPECT_GT(r.omega, prev);
    prev = r.omega;
  }
  EXPECT_LT(prev, omega_star());
}

TEST(Minimizer, RejectsBadInput) {
  EXPECT_THROW(minimize_energy_on_sphere(0.0, grid2d()), InvalidArgument);
  FlowParams fp;
  fp.tolerance = -1.0;
  EXPECT_THROW(minimize_energy_on_sphere(7.0, grid2d(), fp), InvalidArgument);
  FlowParams other;
  other.seed = ComplexField(UniformGrid(2, 40.0, 64));
  EXPECT_THROW(minimize_energy_on_sphere(7.0, grid2d(), other), InvalidArgument);
}

TEST(Minimizer, RescaleToMass) {
  UniformGrid g(1, 20.0, 64);
  const auto u = ComplexField::sample(g, [](const auto& x) { return std::exp(-x[0] * x[0]); });
  EXPECT_NEAR(mass(detail::rescale_to_mass(u, 3.0)), 3.0, 1e-13);
}
