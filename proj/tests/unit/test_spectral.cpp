#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cqnls/experiments.hpp"
#include "cqnls/spectral.hpp"
#include "oracles.hpp"

using namespace cqnls;
using K = OperatorKind;

namespace {

const SolitonProfile& profile(int dim, double omega) {
  static std::map<std::pair<int, double>, SolitonProfile> cache;
  auto it = cache.find({dim, omega});
  if (it == cache.end()) it = cache.emplace(std::pair{dim, omega}, shoot_radial(omega, dim)).first;
  return it->second;
}

SolitonProfile free_profile(int dim, double omega) {
  RadialGrid g(40.0, 2001);
  return SolitonProfile::from_samples(omega, dim, 1.0, g, std::vector<double>(g.size(), 0.0));
}

}  // namespace

TEST(Sector, ProfileIsKernelOfL2) {
  for (int d = 1; d <= 3; ++d) {
    const auto& p = profile(d, 0.1);
    const auto op = build_sector(p, 0, K::L2);
    EXPECT_LT(op.residual(kernel_candidate(p, op)), 1e-6) << d;
  }
}

TEST(Sector, DerivativeIsKernelOfL1AtEllOne) {
  for (int d = 2; d <= 3; ++d) {
    const auto& p = profile(d, 0.1);
    const auto op = build_sector(p, 1, K::L1);
    EXPECT_LT(op.residual(kernel_candidate(p, op)), 1e-4) << d;
  }
}

TEST(Sector, DiagonalCarriesOmegaWhereProfileVanishes) {
  const auto p = free_profile(3, 0.07);
  for (auto kind : {K::L1, K::L2}) {
    const auto op = build_sector(p, 0, kind);
    for (double v : op.potential) EXPECT_EQ(v, 0.07);
  }
  const auto& q = profile(3, 0.07);
  EXPECT_NEAR(build_sector(q, 0, K::L1).potential.back(), 0.07, 1e-12);
}

TEST(Sector, WeightedSymmetry) {
  const auto& p = profile(3, 0.05);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int ell : {0, 1, 2}) {
    const auto op = build_sector(p, ell, K::L1);
    std::vector<double> f(op.size()), g(op.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = n(rng), g[i] = n(rng);
    const auto af = op.apply(f), ag = op.apply(g);
    double lhs = 0, rhs = 0, scale = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      lhs += op.weights[i] * f[i] * ag[i];
      rhs += op.weights[i] * af[i] * g[i];
      scale += op.weights[i] * std::abs(f[i] * ag[i]);
    }
    EXPECT_NEAR(lhs, rhs, 1e-10 * scale) << ell;
  }
  EXPECT_THROW(build_sector(p, -1, K::L1), InvalidArgument);
}

TEST(Sturm, MatchesDenseJacobi) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const int n = 40;
  std::vector<double> a(n), b(n - 1);
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = u(rng);
  std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    dense[i][i] = a[i];
    if (i + 1 < n) dense[i][i + 1] = dense[i + 1][i] = b[i];
  }
  const auto ref = oracle::jacobi_eigenvalues(dense);
  for (int k = 0; k < n; ++k) EXPECT_NEAR(detail::kth_eigenvalue(a, b, k), ref[k], 1e-11) << k;
  for (double x : {-1.0, 0.0, 0.7}) {
    const auto below = std::count_if(ref.begin(), ref.end(), [&](double e) { return e < x; });
    EXPECT_EQ(detail::sturm_count(a, b, x), static_cast<std::size_t>(below));
  }
  const auto [lo, hi] = detail::gershgorin(a, b);
  EXPECT_LE(lo, ref.front());
  EXPECT_GE(hi, ref.back());
}

TEST(Sturm, InverseIterationGivesEigenvector) {
  const auto& p = profile(3, 0.05);
  const auto op = build_sector(p, 0, K::L1);
  const auto ev = eigen_bottom(op, 2);
  for (int i = 0; i < 2; ++i) {
    const auto v = eigenvector(op, i);
    EXPECT_NEAR(op.weighted_norm_sq(v), 1.0, 1e-12);
    const auto av = op.apply(v);
    double r = 0;
    for (std::size_t j = 0; j < v.size(); ++j) r += op.weights[j] * std::pow(av[j] - ev[i] * v[j], 2);
    EXPECT_LT(std::sqrt(r), 1e-8);
  }
}

TEST(EigenBottom, FreeOperatorSpectrumAboveOmega) {
  for (int d = 1; d <= 3; ++d) {
    const auto p = free_profile(d, 0.07);
    for (int ell : {0, 1, 2}) {
      const auto op = build_sector(p, ell, K::L1);
      const auto ev = eigen_bottom(op, 5);
      EXPECT_GE(ev.front(), 0.07);
      EXPECT_EQ(negative_count(op), 0);
      for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_GT(ev[i], ev[i - 1]);
    }
  }
  EXPECT_THROW(eigen_bottom(build_sector(free_profile(1, 0.07), 0, K::L1), 0), InvalidArgument);
}

TEST(EigenBottom, AssumptionStructureIn3d) {
  const auto& p = profile(3, 0.05);
  EXPECT_EQ(negative_count(build_sector(p, 0, K::L1)), 1);
  EXPECT_LT(eigen_bottom(build_sector(p, 0, K::L1), 1)[0], 0.0);
  EXPECT_GT(eigen_bottom(build_sector(p, 2, K::L1), 1)[0], 0.0);
  EXPECT_NEAR(eigen_bottom(build_sector(p, 1, K::L1), 1)[0], 0.0, 1e-4);
  EXPECT_EQ(negative_count(build_sector(p, 1, K::L1), 1e-4), 0);
  EXPECT_EQ(negative_count(build_sector(p, 0, K::L2), 1e-6), 0);
}

TEST(EigenBottom, NegativeCountAgreesWithList) {
  for (int d = 1; d <= 3; ++d)
    for (double w : {0.02, 0.1, 0.17})
      for (auto kind : {K::L1, K::L2})
        for (int ell : {0, 1, 2}) {
          const auto op = build_sector(profile(d, w), ell, kind);
          const auto ev = eigen_bottom(op, 6);
          const double tol = 1e-6;
          const auto listed = std::count_if(ev.begin(), ev.end(), [&](double e) { return e < -tol; });
          EXPECT_EQ(negative_count(op, tol), listed) << d << " " << w << " " << ell;
        }
}

TEST(EigenBottom, L2GroundStateIsProfile) {
  ShootingParams fine;
  fine.n = 8001;
  for (int d = 1; d <= 3; ++d) {
    const auto p = shoot_radial(0.1, d, fine);
    const auto op = build_sector(p, 0, K::L2);
    double vmax = 0;
    for (double v : op.potential) vmax = std::max(vmax, std::abs(v));
    EXPECT_LT(std::abs(eigen_bottom(op, 1)[0]), 1e-6 * vmax);
    const auto s = summarize_sector(p, K::L2, 0, 2, 1e-4);
    EXPECT_GT(*s.kernel_similarity, 1 - 1e-6);
  }
}

TEST(EigenBottom, ResolutionStable) {
  ShootingParams fine;
  fine.n = 2 * fine.n - 1;
  const auto coarse = shoot_radial(0.05, 3), refined = shoot_radial(0.05, 3, fine);
  for (auto kind : {K::L1, K::L2})
    for (int ell : {0, 1, 2}) {
      const auto a = eigen_bottom(build_sector(coarse, ell, kind), 3);
      const auto b = eigen_bottom(build_sector(refined, ell, kind), 3);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-4) << ell << " " << i;
    }
}

TEST(Assumption, HoldsAcrossSweep) {
  for (int d : {2, 3})
    for (double w : {0.01, 0.05, 0.1, 0.15, 0.18}) {
      const auto c = check_assumption(profile(d, w));
      EXPECT_TRUE(c.passed) << d << " " << w << ": " << c.reason;
      const auto j = c.report.to_json();
      EXPECT_EQ(j["sectors"].size(), 5u);
    }
}

TEST(DeltaOde, DivergesNegativeIn3d) {
  const auto& p = profile(3, 0.05);
  for (auto conv : {DeltaConvention::Cited, DeltaConvention::Doubled}) {
    const auto t = delta_ode(p, 0.0, conv);
    EXPECT_TRUE(t.diverges_negative) << to_string(conv);
    ASSERT_TRUE(t.sign_change_radius.has_value());
    EXPECT_NEAR(t.r.back(), 2 * p.grid.r_max(), 1e-9);
  }
}

TEST(DeltaOde, RegularAtOrigin) {
  const auto& p = profile(3, 0.05);
  const auto t = delta_ode(p, 1.0, DeltaConvention::Doubled);
  // delta = 1 + V(0) r^2 / (1 + 2c) + O(r^4) with c = d - 1
  const double v0 = 5 * std::pow(p.values[0], 4) - 3 * std::pow(p.values[0], 2) + p.omega;
  for (std::size_t i = 1; i <= 5; ++i) {
    const double r = t.r[i];
    EXPECT_NEAR(t.delta[i], 1 + v0 * r * r / 5, 1e-6);
  }
  EXPECT_EQ(t.delta[0], 1.0);
  EXPECT_EQ(t.ddelta[0], 0.0);
  EXPECT_THROW(delta_ode(p, 1.0, DeltaConvention::Cited, -0.1), InvalidArgument);
}

TEST(DeltaOde, SignChangeRadiusResolutionStable) {
  ShootingParams fine;
  fine.n = 2 * fine.n - 1;
  const auto coarse = shoot_radial(0.05, 3), refined = shoot_radial(0.05, 3, fine);
  const auto a = delta_ode(coarse, 0.0, DeltaConvention::Cited, 0.01).sign_change_radius;
  const auto b = delta_ode(refined, 0.0, DeltaConvention::Cited, 0.005).sign_change_radius;
  ASSERT_TRUE(a && b);
  EXPECT_NEAR(*b / *a, 1.0, 0.01);
  // the doubled convention crosses zero only where the decaying mode has died out
  const auto c = delta_ode(coarse, 0.0, DeltaConvention::Doubled, 0.01);
  ASSERT_TRUE(c.sign_change_radius);
  EXPECT_GT(*c.sign_change_radius, 5 * *a);
}

TEST(Gss, VerdictsFollowTheMassSlope) {
  MassCurveOptions opt;
  opt.spectral_verdicts = false;
  const auto c2 = mass_curve(2, {0.008, 0.01, 0.012}, opt);
  EXPECT_EQ(gss_verdict(c2, 0.01), Verdict::Stable);
  const auto c3 = mass_curve(3, {0.008, 0.01, 0.012}, opt);
  EXPECT_EQ(gss_verdict(c3, 0.01), Verdict::Unstable);
  const auto c3s = mass_curve(3, {0.178, 0.18, 0.182}, opt);
  EXPECT_EQ(gss_verdict(c3s, 0.18), Verdict::Stable);
}

TEST(Gss, InconclusiveInsideToleranceAndGuards) {
  MassCurve flat;
  flat.dim = 3;
  flat.omegas = {0.05, 0.06, 0.07};
  flat.masses = {80.0, 80.0, 80.0};
  AssumptionCheck ok;
  ok.passed = true;
  EXPECT_EQ(gss_verdict(flat, 0.06, ok), Verdict::Inconclusive);
  EXPECT_THROW(gss_verdict(flat, 0.05, ok), InvalidArgument);
  AssumptionCheck bad;
  bad.reason = "L1 ell=0 negative count is 2";
  EXPECT_THROW(gss_verdict(flat, 0.06, bad), AssumptionViolated);
}
