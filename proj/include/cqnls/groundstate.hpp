#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/field.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ode.hpp"
#include "cqnls/quadrature.hpp"

namespace cqnls {

/// Supremum of the frequencies for which (omega/2) s^2 - F(s) < 0 for some s > 0,
/// F(s) = s^4/4 - s^6/6. Dividing by s^2/2 reduces this to the maximum of the
/// concave quadratic h(m) = m/2 - m^2/3 in m = s^2.
inline double omega_star() {
  constexpr double lin = 2.0 * (1.0 / 4.0);   // 2 * coefficient of s^4 in F
  constexpr double quad = -2.0 * (1.0 / 6.0);  // 2 * coefficient of -s^6 in F
  constexpr double m_star = -lin / (2.0 * quad);
  return lin * m_star + quad * m_star * m_star;
}

/// Upper bound on the height of a real solitary wave at frequency omega.
inline double linf_bound(double omega) {
  if (!(omega > 0.0) || omega > 0.25) throw OmegaOutOfRange("linf_bound: requires 0 < omega <= 1/4");
  return std::sqrt(0.5 * (1.0 + std::sqrt(1.0 - 4.0 * omega)));
}

/// Explicit one-dimensional ground state. omega = 3/16 is accepted as the limiting
/// constant state sqrt(3)/2.
inline double soliton_1d_closed_form(double omega, double x) {
  if (!(omega > 0.0) || omega > 3.0 / 16.0)
    throw OmegaOutOfRange("soliton_1d_closed_form: requires 0 < omega <= 3/16");
  const double c = std::sqrt(std::max(0.0, 1.0 - 16.0 * omega / 3.0));
  const double arg = 2.0 * std::abs(x) * std::sqrt(2.0 * omega);
  if (c > 0.0 && arg > 700.0) return 0.0;
  return 2.0 * std::sqrt(omega / (1.0 + c * std::cosh(arg)));
}

/// Local nonlinearity of the stationary equation -1/2 Lap phi + g(phi) = 0 written as
/// phi'' + (d-1)/r phi' = 2 g(phi) with g(phi) = omega phi - phi^3 + q phi^5.
struct Nonlinearity {
  double omega;
  double quintic = 1.0;
  double g(double p) const noexcept { return p * (omega - p * p + quintic * p * p * p * p); }
  double dg(double p) const noexcept { return omega - 3.0 * p * p + 5.0 * quintic * p * p * p * p; }
};

struct ShootingParams {
  double r_max = 40.0;           // minimum extent of the returned grid
  int n = 4001;                  // node count on [0, r_max]; fixes the spacing
  double bisection_tol = 1e-16;  // relative width of the final height bracket
  int max_bisections = 200;
  double blowup_threshold = 2.0;   // multiple of the height cap treated as divergence
  double decay_threshold = 1e-6;   // relative disagreement of the bracketing trajectories
  double rtol = 1e-12;             // integrator tolerances
  double atol = 1e-16;

  void validate() const {
    if (!(r_max > 0.0)) throw InvalidArgument("ShootingParams: r_max must be positive");
    if (n < 16) throw InvalidArgument("ShootingParams: n must be >= 16");
    if (!(bisection_tol > 0.0) || !(decay_threshold > 0.0) || !(rtol > 0.0) || !(atol > 0.0))
      throw InvalidArgument("ShootingParams: tolerances must be positive");
    if (max_bisections < 1) throw InvalidArgument("ShootingParams: max_bisections must be positive");
    if (!(blowup_threshold > 1.0)) throw InvalidArgument("ShootingParams: blowup_threshold must exceed 1");
  }
  double spacing() const { return r_max / (n - 1); }
};

namespace detail {

/// Decaying solution of the linear equation -1/2 Lap f + (kappa^2/2) f = 0.
inline double linear_tail(int dim, double kappa, double r) {
  switch (dim) {
    case 1: return std::exp(-kappa * r);
    case 2: return std::cyl_bessel_k(0.0, kappa * r);
    default: return std::exp(-kappa * r) / r;
  }
}

inline double linear_tail_deriv(int dim, double kappa, double r) {
  switch (dim) {
    case 1: return -kappa * std::exp(-kappa * r);
    case 2: return -kappa * std::cyl_bessel_k(1.0, kappa * r);
    default: return -std::exp(-kappa * r) * (kappa * r + 1.0) / (r * r);
  }
}

/// Regular growing solution G(x) of G'' + (d-1)/x G' = G with G(0) = 1.
inline double regular_growth(int dim, double x) {
  switch (dim) {
    case 1: return std::cosh(x);
    case 2: return std::cyl_bessel_i(0.0, x);
    default: return x < 1e-8 ? 1.0 + x * x / 6.0 : std::sinh(x) / x;
  }
}

inline double regular_growth_deriv(int dim, double x) {
  switch (dim) {
    case 1: return std::sinh(x);
    case 2: return std::cyl_bessel_i(1.0, x);
    default: return x < 1e-4 ? x / 3.0 : (x * std::cosh(x) - std::sinh(x)) / (x * x);
  }
}

}  // namespace detail

/// Real radial ground state phi(r) sampled on a RadialGrid together with its
/// integral invariants. Beyond `tail_start` the samples follow the decaying linear
/// solution matched in value at tail_start.
struct SolitonProfile {
  double omega = 0.0;
  int dim = 1;
  double quintic = 1.0;  // 0 marks the cubic reference state
  RadialGrid grid{1.0, 3};
  std::vector<double> values;
  std::vector<double> derivs;
  double mass = 0.0;
  double grad_sq = 0.0;
  double l4 = 0.0;  // integral of phi^4
  double l6 = 0.0;  // integral of phi^6
  double energy = 0.0;
  double action = 0.0;
  double sup_norm = 0.0;
  double decay_rate = 0.0;
  double tail_start = -1.0;  // < 0: no analytic tail beyond the grid
  double tail_value = 0.0;

  double kappa() const { return std::sqrt(2.0 * omega); }

  /// Cubic Hermite interpolation in r; analytic tail (or 0) beyond the grid.
  double value_at(double r) const {
    r = std::abs(r);
    if (r >= grid.r_max()) {
      if (tail_start <= 0.0) return r == grid.r_max() ? values.back() : 0.0;
      return tail_value * detail::linear_tail(dim, kappa(), r) / detail::linear_tail(dim, kappa(), tail_start);
    }
    const double h = grid.spacing();
    const int j = std::min(static_cast<int>(r / h), grid.size() - 2);
    const double t = (r - j * h) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * values[j] + h10 * h * derivs[j] + h01 * values[j + 1] + h11 * h * derivs[j + 1];
  }

  double deriv_at(double r) const {
    const double sgn = r < 0 ? -1.0 : 1.0;
    r = std::abs(r);
    if (r >= grid.r_max()) {
      if (tail_start <= 0.0) return 0.0;
      return sgn * tail_value * detail::linear_tail_deriv(dim, kappa(), r) /
             detail::linear_tail(dim, kappa(), tail_start);
    }
    const double h = grid.spacing();
    const int j = std::min(static_cast<int>(r / h), grid.size() - 2);
    const double t = (r - j * h) / h;
    const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1;
    const double d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
    return sgn * ((d00 * values[j] + d01 * values[j + 1]) / h + d10 * derivs[j] + d11 * derivs[j + 1]);
  }

  /// Recomputes the integral invariants from the samples.
  void recompute_scalars() {
    const std::size_t n = values.size();
    std::vector<double> f2(n), g2(n), f4(n), f6(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double p2 = values[j] * values[j];
      f2[j] = p2;
      f4[j] = p2 * p2;
      f6[j] = p2 * p2 * p2;
      g2[j] = derivs[j] * derivs[j];
    }
    mass = quad::radial_integral(grid, f2, dim);
    grad_sq = quad::radial_integral(grid, g2, dim);
    l4 = quad::radial_integral(grid, f4, dim);
    l6 = quad::radial_integral(grid, f6, dim);
    energy = 0.5 * grad_sq - 0.5 * l4 + quintic * l6 / 3.0;
    action = energy + omega * mass;
    sup_norm = 0.0;
    for (double v : values) sup_norm = std::max(sup_norm, std::abs(v));
  }

  /// Builds a profile from samples; derivatives default to fourth-order differences
  /// using the even extension at r = 0.
  static SolitonProfile from_samples(double omega, int dim, double quintic, RadialGrid grid,
                                     std::vector<double> values, std::vector<double> derivs = {}) {
    if (values.size() != static_cast<std::size_t>(grid.size()))
      throw InvalidArgument("SolitonProfile: sample count does not match grid");
    if (dim < 1 || dim > 3) throw InvalidArgument("SolitonProfile: dim must be 1, 2 or 3");
    const int n = grid.size();
    if (derivs.empty()) {
      derivs.assign(n, 0.0);
      const double h = grid.spacing();
      auto at = [&](int j) { return j < 0 ? values[-j] : (j >= n ? 0.0 : values[j]); };
      for (int j = 0; j < n; ++j)
        derivs[j] = (at(j - 2) - 8 * at(j - 1) + 8 * at(j + 1) - at(j + 2)) / (12 * h);
      derivs[0] = 0.0;
    }
    if (derivs.size() != values.size()) throw InvalidArgument("SolitonProfile: derivative count mismatch");
    SolitonProfile p;
    p.omega = omega;
    p.dim = dim;
    p.quintic = quintic;
    p.grid = grid;
    p.values = std::move(values);
    p.derivs = std::move(derivs);
    p.recompute_scalars();
    return p;
  }
};

/// Both Pohozaev identities evaluated on the profile, each divided by the sum of the
/// absolute values of its terms.
inline std::pair<double, double> pohozaev_residuals(const SolitonProfile& p) {
  const double d = p.dim, w = p.omega, q = p.quintic;
  const double t1[] = {0.5 * p.grad_sq, -p.l4, q * p.l6, w * p.mass};
  const double t2[] = {0.5 * (d - 2.0) * p.grad_sq, -0.5 * d * p.l4, q * d / 3.0 * p.l6, w * d * p.mass};
  auto norm = [](const double* t) {
    double s = 0.0, a = 0.0;
    for (int i = 0; i < 4; ++i) {
      s += t[i];
      a += std::abs(t[i]);
    }
    return a > 0.0 ? s / a : 0.0;
  };
  return {norm(t1), norm(t2)};
}

namespace detail {

enum class Outcome { Overshoot, Undershoot };

struct Trajectory {
  Outcome outcome = Outcome::Undershoot;
  std::vector<double> phi;
  std::vector<double> dphi;
};

struct ShootContext {
  Nonlinearity nl;
  int dim = 1;
  double top = 1.0;     // height cap; the start height is top - eps
  double lambda = 0.0;  // growth rate of deviations from `top` when it is an equilibrium
  double dr = 0.01;
  double blowup = 2.0;
  ode::Tolerance tol;
  double r_cap = 5000.0;
};

inline constexpr double kLinearStart = 1e-7;

// One trajectory from height top - eps until it crosses zero (overshoot) or turns
// upward (undershoot). Samples are recorded at the nodes j*dr reached before the event.
inline Trajectory shoot_once(const ShootContext& c, double eps) {
  Trajectory tr;
  const int dim = c.dim;
  auto rhs = [&](double r, const std::array<double, 2>& y) -> std::array<double, 2> {
    const double src = 2.0 * c.nl.g(y[0]);
    if (r == 0.0) return {y[1], src / dim};
    return {y[1], src - (dim - 1) * y[1] / r};
  };
  std::array<double, 2> y{};
  int j = 0;
  if (eps >= kLinearStart || c.lambda <= 0.0) {
    y = {c.top - eps, 0.0};
    tr.phi.push_back(y[0]);
    tr.dphi.push_back(0.0);
  } else {
    // Deviation eps*G(lambda r) stays linear until it reaches kLinearStart.
    const double target = kLinearStart / eps;
    double lo = 0.0, hi = 1.0;
    while (regular_growth(dim, hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (regular_growth(dim, mid) < target ? lo : hi) = mid;
    }
    const int j0 = static_cast<int>(std::ceil(hi / c.lambda / c.dr));
    for (j = 0; j <= j0; ++j) {
      const double x = c.lambda * j * c.dr;
      tr.phi.push_back(c.top - eps * regular_growth(dim, x));
      tr.dphi.push_back(-eps * c.lambda * regular_growth_deriv(dim, x));
    }
    j = j0;
    y = {tr.phi.back(), tr.dphi.back()};
  }
  double h = c.dr;
  bool ended = false;
  auto stop = [&](double, const std::array<double, 2>& s) {
    if (s[0] < 0.0) {
      tr.outcome = Outcome::Overshoot;
      return ended = true;
    }
    if (s[1] > 0.0 || s[0] > c.blowup) {
      tr.outcome = Outcome::Undershoot;
      return ended = true;
    }
    return false;
  };
  while (!ended) {
    const double r0 = j * c.dr, r1 = (j + 1) * c.dr;
    if (r1 > c.r_cap) {
      tr.outcome = Outcome::Undershoot;
      break;
    }
    if (ode::advance<2>(rhs, r0, r1, y, h, c.tol, stop) == ode::Advance::Reached) {
      tr.phi.push_back(y[0]);
      tr.dphi.push_back(y[1]);
      ++j;
    }
  }
  return tr;
}

inline SolitonProfile shoot_profile(const Nonlinearity& nl, int dim, double top, double lambda,
                                    const ShootingParams& params) {
  params.validate();
  ShootContext c;
  c.nl = nl;
  c.dim = dim;
  c.top = top;
  c.lambda = lambda;
  c.dr = params.spacing();
  c.blowup = params.blowup_threshold * top;
  c.tol = {params.rtol, params.atol, 1e-14};

  // Bisection on the offset eps below the cap, geometric while the bracket is wide.
  double eps_over = 1e-200;
  double eps_under = top - 1e-6;
  Trajectory t_over = shoot_once(c, eps_over);
  Trajectory t_under = shoot_once(c, eps_under);
  if (t_over.outcome != Outcome::Overshoot || t_under.outcome != Outcome::Undershoot)
    throw ConvergenceFailure("shoot_radial: initial height bracket does not separate the trajectories");
  bool converged = false;
  for (int it = 0; it < params.max_bisections; ++it) {
    if (eps_under - eps_over <= params.bisection_tol * eps_under) {
      converged = true;
      break;
    }
    const double mid = (eps_under / eps_over > 4.0) ? std::sqrt(eps_over) * std::sqrt(eps_under)
                                                    : 0.5 * (eps_over + eps_under);
    if (mid <= eps_over || mid >= eps_under) {
      converged = true;
      break;
    }
    Trajectory t = shoot_once(c, mid);
    if (t.outcome == Outcome::Overshoot) {
      eps_over = mid;
      t_over = std::move(t);
    } else {
      eps_under = mid;
      t_under = std::move(t);
    }
  }
  if (!converged) throw ConvergenceFailure("shoot_radial: bisection exhausted max_bisections");

  // The true profile lies between the two bracketing trajectories; trust it until they
  // disagree, then continue with the matched linear tail.
  const std::size_t common = std::min(t_over.phi.size(), t_under.phi.size());
  const double phi0 = 0.5 * (t_over.phi[0] + t_under.phi[0]);
  std::size_t cut = 0;
  for (std::size_t j = 1; j < common; ++j) {
    const double mid = 0.5 * (t_over.phi[j] + t_under.phi[j]);
    const double dmid = 0.5 * (t_over.dphi[j] + t_under.dphi[j]);
    if (std::abs(t_over.phi[j] - t_under.phi[j]) > params.decay_threshold * std::abs(mid) || dmid >= 0.0 ||
        mid <= 0.0)
      break;
    cut = j;
  }
  if (cut < 4) throw ConvergenceFailure("shoot_radial: bracketing trajectories never agree");
  auto mid_at = [&](std::size_t j) { return 0.5 * (t_over.phi[j] + t_under.phi[j]); };
  auto dmid_at = [&](std::size_t j) { return 0.5 * (t_over.dphi[j] + t_under.dphi[j]); };
  if (mid_at(cut) > 1e-3 * phi0)
    throw ConvergenceFailure("shoot_radial: decaying branch not resolved before the trajectories separate");

  const double kappa = std::sqrt(2.0 * nl.omega);
  const double r_cut = cut * c.dr;
  const double phi_cut = mid_at(cut);
  const double t_cut = linear_tail(dim, kappa, r_cut);
  std::size_t n_total = std::max<std::size_t>(params.n, cut + 2);
  // extend until the tail is negligible at double precision
  while (n_total < 4'000'000) {
    const double r = (n_total - 1) * c.dr;
    if (phi_cut * linear_tail(dim, kappa, r) / t_cut < 1e-16 * phi0) break;
    n_total += 1024;
  }
  std::vector<double> v(n_total), dv(n_total);
  for (std::size_t j = 0; j < n_total; ++j) {
    if (j <= cut) {
      v[j] = mid_at(j);
      dv[j] = dmid_at(j);
    } else {
      const double r = j * c.dr;
      v[j] = phi_cut * linear_tail(dim, kappa, r) / t_cut;
      dv[j] = phi_cut * linear_tail_deriv(dim, kappa, r) / t_cut;
    }
  }
  dv[0] = 0.0;
  for (std::size_t j = 1; j < n_total; ++j)
    if (v[j] > v[j - 1]) throw ConvergenceFailure("shoot_radial: profile is not monotone");

  auto grid = RadialGrid::with_spacing(c.dr, static_cast<int>(n_total));
  SolitonProfile p = SolitonProfile::from_samples(nl.omega, dim, nl.quintic, grid, std::move(v), std::move(dv));
  p.tail_start = r_cut;
  p.tail_value = phi_cut;

  // Decay rate from the trajectory data (not the synthetic tail): slope of
  // log(phi r^{(d-1)/2}) where phi has fallen below 1% of its height.
  std::vector<double> xs, ys;
  for (std::size_t j = 1; j <= cut; ++j) {
    if (p.values[j] > 1e-2 * phi0) continue;
    const double r = j * c.dr;
    xs.push_back(r);
    ys.push_back(std::log(p.values[j] * std::pow(r, 0.5 * (dim - 1))));
  }
  if (xs.size() >= 8) {
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
    p.decay_rate = -sxy / sxx;
  } else {
    p.decay_rate = kappa;
  }
  return p;
}

}  // namespace detail

/// Positive radial decaying solution of -1/2 Lap phi - phi^3 + phi^5 + omega phi = 0
/// found by shooting from r = 0 and bisecting on the central height.
inline SolitonProfile shoot_radial(double omega, int dim, const ShootingParams& params = {}) {
  if (dim < 1 || dim > 3) throw InvalidArgument("shoot_radial: dim must be 1, 2 or 3");
  if (!(omega > 0.0) || omega >= omega_star())
    throw NoSoliton("shoot_radial: solitary waves exist only for 0<omega<3/16");
  const Nonlinearity nl{omega, 1.0};
  const double top = linf_bound(omega);
  const double lambda = std::sqrt(2.0 * nl.dg(top));
  return detail::shoot_profile(nl, dim, top, lambda, params);
}

/// Cubic reference state -1/2 Lap Q + Q - Q^3 = 0 (omega = 1, no quintic term).
inline SolitonProfile cubic_ground_state(int dim, const ShootingParams& params = {}) {
  if (dim != 2 && dim != 3) throw InvalidArgument("cubic_ground_state: dim must be 2 or 3");
  const Nonlinearity nl{1.0, 0.0};
  return detail::shoot_profile(nl, dim, 10.0, 0.0, params);
}

/// Samples phi(|x - center|) on a Cartesian grid.
inline ComplexField to_field(const SolitonProfile& p, const UniformGrid& grid,
                             std::array<double, 3> center = {0.0, 0.0, 0.0}) {
  if (grid.dim() != p.dim) throw DimensionError("to_field: profile and grid dimensions differ");
  return ComplexField::sample(grid, [&](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return p.value_at(std::sqrt(r2));
  });
}

}  // namespace cqnls
