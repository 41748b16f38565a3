#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/field.hpp"

namespace cqnls {

struct FlowParams {
  enum class Method { GradientFlow, ConjugateGradient };
  Method method = Method::ConjugateGradient;
  double tau = 2.0;            // initial pseudo-time step (gradient flow)
  double min_tau = 1e-6;
  int max_iterations = 20000;
  double tolerance = 1e-8;     // Euler-Lagrange residual
  double seed_width = 3.0;     // width of the default Gaussian seed
  std::optional<ComplexField> seed;

  void validate() const {
    if (!(tau > 0.0) || !(min_tau > 0.0) || !(tolerance > 0.0) || max_iterations < 1 || !(seed_width > 0.0))
      throw InvalidArgument("FlowParams: step sizes, tolerance, iteration cap and seed width must be positive");
  }
};

struct MinimizerResult {
  ComplexField field;
  double omega = 0.0;     // Lagrange multiplier of the mass constraint
  double energy = 0.0;
  double residual = 0.0;  // ||H u + omega u|| / ||u||
  int iterations = 0;
};

namespace detail {

/// H u = -1/2 Lap u - |u|^2 u + |u|^4 u.
inline std::vector<cplx> hamiltonian_apply(const ComplexField& u) {
  auto lap = spectral_laplacian(u);
  for (std::size_t i = 0; i < lap.size(); ++i) {
    const double a2 = std::norm(u[i]);
    lap[i] = -0.5 * lap[i] + (a2 * a2 - a2) * u[i];
  }
  return lap;
}

struct FlowState {
  double omega;
  double residual;
};

inline FlowState euler_lagrange(const ComplexField& u) {
  const auto hu = hamiltonian_apply(u);
  const double m = mass(u);
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < hu.size(); ++i) s += std::conj(u[i]) * hu[i];
  const double omega = -s.real() * u.grid().cell_volume() / m;
  double r = 0.0;
  for (std::size_t i = 0; i < hu.size(); ++i) r += std::norm(hu[i] + omega * u[i]);
  return {omega, std::sqrt(r * u.grid().cell_volume() / m)};
}

inline ComplexField rescale_to_mass(const ComplexField& u, double rho) {
  return u.scaled(std::sqrt(rho / mass(u)));
}

}  // namespace detail

/// Minimizes E on {M(u) = rho}. GradientFlow is a normalized gradient flow: a
/// semi-implicit step
///   u <- (1 + tau(-Lap/2 + a))^{-1} (u + tau(|u|^2 u - |u|^4 u + a u)),
/// followed by rescaling to mass rho; tau is halved whenever the energy rises.
/// ConjugateGradient runs Polak-Ribiere conjugate gradients on the mass sphere with
/// the same (-Lap/2 + a)^{-1} preconditioner and a great-circle line search.
/// A flow that spreads over the box (or stalls with E >= 0) has no localized
/// negative-energy minimizer at this mass and resolution.
inline MinimizerResult minimize_energy_on_sphere(double rho, const UniformGrid& grid, const FlowParams& params = {}) {
  params.validate();
  if (!(rho > 0.0)) throw InvalidArgument("minimize_energy_on_sphere: rho must be positive");
  ComplexField u = params.seed ? *params.seed : ComplexField::sample(grid, [&](const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return std::exp(-0.5 * r2 / (params.seed_width * params.seed_width));
  });
  if (!(u.grid() == grid)) throw InvalidArgument("minimize_energy_on_sphere: seed grid differs");
  if (!(mass(u) > 0.0)) throw InvalidArgument("minimize_energy_on_sphere: seed must be nonzero");
  u = detail::rescale_to_mass(u, rho);

  const double volume = grid.volume();
  auto spread = [&](const ComplexField& f) {
    double peak = 0.0;
    for (const auto& z : f.values()) peak = std::max(peak, std::norm(z));
    return peak < 4.0 * rho / volume;
  };

  const auto k2 = wavenumber_sq(grid);
  double e = energy(u);
  auto st = detail::euler_lagrange(u);
  int it = 0;
  if (params.method == FlowParams::Method::GradientFlow) {
    double tau = params.tau;
    for (; it < params.max_iterations && st.residual >= params.tolerance; ++it) {
      const double shift = std::clamp(st.omega, 0.01, 1.0);
      std::vector<cplx> v(u.data());
      for (auto& z : v) {
        const double a2 = std::norm(z);
        z += tau * (a2 - a2 * a2 + shift) * z;
      }
      fft::forward(grid, v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] /= 1.0 + tau * (0.5 * k2[i] + shift);
      fft::inverse(grid, v);
      ComplexField next = detail::rescale_to_mass(ComplexField(grid, std::move(v)), rho);
      const double en = energy(next);
      if (en > e + 1e-14 * std::abs(e)) {
        tau *= 0.5;
        if (tau < params.min_tau) break;
        continue;
      }
      u = std::move(next);
      e = en;
      st = detail::euler_lagrange(u);
      if (spread(u)) break;
    }
  } else {
    const double dv = grid.cell_volume();
    auto dot = [dv](const std::vector<cplx>& a, const std::vector<cplx>& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (std::conj(a[i]) * b[i]).real();
      return s * dv;
    };
    auto precondition = [&](std::vector<cplx> v, double shift) {
      fft::forward(grid, v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] /= 0.5 * k2[i] + shift;
      fft::inverse(grid, v);
      return v;
    };
    std::vector<cplx> dir, prev_r, prev_pg;
    double theta_guess = 0.1;
    for (; it < params.max_iterations && st.residual >= params.tolerance; ++it) {
      // tangent gradient r = H u + omega u and its preconditioned projection
      auto r = detail::hamiltonian_apply(u);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += st.omega * u[i];
      const double shift = std::clamp(st.omega, 0.01, 1.0);
      auto pg = precondition(r, shift);
      const auto pu = precondition(u.data(), shift);
      const double c = dot(u.data(), pg) / dot(u.data(), pu);
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] -= c * pu[i];
      double beta = 0.0;
      if (!dir.empty()) {
        double num = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) num += (std::conj(r[i]) * (pg[i] - prev_pg[i])).real();
        beta = std::max(0.0, num * dv / dot(prev_r, prev_pg));
      }
      std::vector<cplx> p(pg.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = -pg[i] + (dir.empty() ? 0.0 : beta * dir[i]);
      auto project = [&](std::vector<cplx>& q) {
        const double a = dot(u.data(), q) / rho;
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= a * u[i];
      };
      project(p);
      auto hu = detail::hamiltonian_apply(u);
      double slope = 2.0 * dot(hu, p);
      if (!(slope < 0.0)) {
        p = pg;
        for (auto& z : p) z = -z;
        project(p);
        slope = 2.0 * dot(hu, p);
      }
      const double pn = std::sqrt(dot(p, p));
      if (!(pn > 0.0) || !(slope < 0.0)) break;
      // u(theta) = cos(theta) u + sin(theta) sqrt(rho) p / |p|
      const double scale = std::sqrt(rho) / pn;
      slope *= scale;
      auto along = [&](double th) {
        std::vector<cplx> v(u.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::cos(th) * u[i] + std::sin(th) * scale * p[i];
        return detail::rescale_to_mass(ComplexField(grid, std::move(v)), rho);
      };
      // secant on the directional derivative; energy differences vanish below roundoff
      // long before the residual reaches its tolerance
      auto slope_at = [&](const ComplexField& v, double th) {
        const auto hv = detail::hamiltonian_apply(v);
        double s = 0.0;
        for (std::size_t i = 0; i < hv.size(); ++i)
          s += (std::conj(hv[i]) * (-std::sin(th) * u[i] + std::cos(th) * scale * p[i])).real();
        return 2.0 * s * dv;
      };
      const double noise = 1e-12 * (std::abs(e) + gradient_norm_sq(u));
      double t1 = theta_guess;
      ComplexField trial = along(t1);
      const double s1 = slope_at(trial, t1);
      if (s1 > slope) {
        const double tstar = std::min(t1 * slope / (slope - s1), 4.0 * t1);
        trial = along(tstar);
        t1 = tstar;
      }
      double e1 = energy(trial);
      while (!(e1 <= e + noise) && t1 > 1e-14) {
        t1 *= 0.5;
        trial = along(t1);
        e1 = energy(trial);
      }
      if (!(e1 <= e + noise)) break;
      theta_guess = std::clamp(t1, 1e-8, 0.5);
      dir = std::move(p);
      prev_r = std::move(r);
      prev_pg = std::move(pg);
      u = std::move(trial);
      e = e1;
      st = detail::euler_lagrange(u);
      if (spread(u)) break;
    }
  }
  if (spread(u) || !(e < 0.0))
    throw NoNegativeEnergyMinimizer("no localized minimizer with negative energy at mass " + std::to_string(rho) +
                                    " (flow ended at E = " + std::to_string(e) + " after " + std::to_string(it) +
                                    " iterations)");
  if (st.residual >= params.tolerance)
    throw ConvergenceFailure("energy minimization did not reach the Euler-Lagrange tolerance (residual " +
                             std::to_string(st.residual) + ")");
  return {u, st.omega, e, st.residual, it};
}

}  // namespace cqnls
