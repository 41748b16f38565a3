#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqnls/errors.hpp"
#include "cqnls/groundstate.hpp"
#include "cqnls/mass_curve.hpp"
#include "cqnls/ode.hpp"

namespace cqnls {

enum class OperatorKind { L1, L2 };

inline const char* to_string(OperatorKind k) { return k == OperatorKind::L1 ? "L1" : "L2"; }

/// Radial block of L1 = -Lap/2 + omega - 3 phi^2 + 5 phi^4 or L2 = -Lap/2 + omega - phi^2 + phi^4
/// on the angular sector of degree ell.
///
/// Vertex-centred finite volumes in the measure r^{d-1} dr: node j owns the cell
/// [r_{j-1/2}, r_{j+1/2}] of weight W_j, fluxes use face weights r_{j+1/2}^{d-1}. This gives
/// K f = lambda W f with K symmetric tridiagonal; the stored matrix is W^{-1/2} K W^{-1/2}.
/// Node 0 is kept (Neumann) for ell = 0 and removed (Dirichlet) for ell >= 1; the last node
/// is Dirichlet.
struct SectorOperator {
  double omega = 0.0;
  int dim = 1;
  int ell = 0;
  OperatorKind kind = OperatorKind::L1;
  RadialGrid grid{1.0, 3};
  int first = 0;                  // first unknown node
  std::vector<double> diag;       // symmetrized matrix, unknowns first .. n-2
  std::vector<double> off;        // off[i] couples unknowns i and i+1
  std::vector<double> weights;    // W_j of each unknown
  std::vector<double> potential;  // V(r_j) of each unknown (without the centrifugal term)

  std::size_t size() const { return diag.size(); }
  double node(std::size_t i) const { return grid.node(first + static_cast<int>(i)); }

  /// (W^{-1} K f) for nodal values f of the unknowns.
  std::vector<double> apply(const std::vector<double>& f) const {
    const std::size_t n = size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sqrt(weights[i]);
      double v = diag[i] * s * f[i];
      if (i > 0) v += off[i - 1] * std::sqrt(weights[i - 1]) * f[i - 1];
      if (i + 1 < n) v += off[i] * std::sqrt(weights[i + 1]) * f[i + 1];
      g[i] = v / s;
    }
    return g;
  }

  /// ||f||^2 in the weighted measure.
  double weighted_norm_sq(const std::vector<double>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += weights[i] * f[i] * f[i];
    return s;
  }

  /// ||op f|| / ||f|| in the weighted measure.
  double residual(const std::vector<double>& f) const {
    return std::sqrt(weighted_norm_sq(apply(f)) / weighted_norm_sq(f));
  }
};

inline SectorOperator build_sector(const SolitonProfile& profile, int ell, OperatorKind kind) {
  if (ell < 0) throw InvalidArgument("build_sector: ell must be >= 0");
  const int d = profile.dim;
  const auto& g = profile.grid;
  const int n = g.size();
  const double h = g.spacing();
  const double q = profile.quintic;
  const double w = profile.omega;
  SectorOperator op;
  op.omega = w;
  op.dim = d;
  op.ell = ell;
  op.kind = kind;
  op.grid = g;
  op.first = ell == 0 ? 0 : 1;
  const int last = n - 2;  // node n-1 is Dirichlet
  if (last < op.first) throw InvalidArgument("build_sector: grid too small");
  auto face_weight = [&](double r) { return std::pow(r, d - 1); };
  auto cell_weight = [&](int j) {
    const double lo = j == 0 ? 0.0 : (j - 0.5) * h;
    const double hi = (j + 0.5) * h;
    return (std::pow(hi, d) - std::pow(lo, d)) / d;
  };
  // integral of r^{d-3} (r / r_j)^ell over the cell: exact for the regular behaviour
  // f ~ r^ell of the sector near the origin
  auto cell_inverse_sq = [&](int j) {
    const double lo = (j - 0.5) * h, hi = (j + 0.5) * h, rj = j * h;
    const int e = d - 2 + ell;
    if (e == 0) return std::log(hi / lo);
    return (std::pow(hi, e) - std::pow(lo, e)) / (e * std::pow(rj, ell));
  };
  const double centrifugal = 0.5 * ell * (ell + d - 2.0);
  const int m = last - op.first + 1;
  op.diag.resize(m);
  op.off.resize(m > 0 ? m - 1 : 0);
  op.weights.resize(m);
  op.potential.resize(m);
  for (int i = 0; i < m; ++i) {
    const int j = op.first + i;
    const double p2 = profile.values[j] * profile.values[j];
    const double v = kind == OperatorKind::L1 ? w - 3.0 * p2 + 5.0 * q * p2 * p2 : w - p2 + q * p2 * p2;
    const double wj = cell_weight(j);
    const double right = face_weight((j + 0.5) * h);
    const double left = j == 0 ? 0.0 : face_weight((j - 0.5) * h);
    double k = 0.5 * (left + right) / h + wj * v;
    if (centrifugal > 0.0) k += centrifugal * cell_inverse_sq(j);
    op.weights[i] = wj;
    op.potential[i] = v;
    op.diag[i] = k / wj;
  }
  for (int i = 0; i + 1 < m; ++i) {
    const int j = op.first + i;
    const double kij = -0.5 * face_weight((j + 0.5) * h) / h;
    op.off[i] = kij / std::sqrt(op.weights[i] * op.weights[i + 1]);
  }
  return op;
}

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below x.
inline std::size_t sturm_count(const std::vector<double>& a, const std::vector<double>& b, double x) {
  std::size_t count = 0;
  double qv = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double b2 = i == 0 ? 0.0 : b[i - 1] * b[i - 1];
    qv = a[i] - x - (i == 0 ? 0.0 : b2 / qv);
    if (qv == 0.0) qv = -tiny;
    if (qv < 0.0) ++count;
  }
  return count;
}

inline std::pair<double, double> gershgorin(const std::vector<double>& a, const std::vector<double>& b) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double rad = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i + 1 < a.size() ? std::abs(b[i]) : 0.0);
    lo = std::min(lo, a[i] - rad);
    hi = std::max(hi, a[i] + rad);
  }
  return {lo, hi};
}

/// k-th smallest eigenvalue (0-based) by Sturm bisection.
inline double kth_eigenvalue(const std::vector<double>& a, const std::vector<double>& b, std::size_t k) {
  auto [lo, hi] = gershgorin(a, b);
  const double scale = std::max(std::abs(lo), std::abs(hi));
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(a, b, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Eigenvector of a tridiagonal matrix for an accurate eigenvalue by inverse iteration.
inline std::vector<double> inverse_iteration(const std::vector<double>& a, const std::vector<double>& b,
                                             double lambda) {
  const std::size_t n = a.size();
  auto [lo, hi] = gershgorin(a, b);
  const double shift = lambda + 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) x[i] *= 1.0 + 0.01 * std::sin(1.0 + i);  // avoid orthogonal starts
  std::vector<double> cp(n), dp(n);
  for (int it = 0; it < 4; ++it) {
    // Thomas algorithm on (T - shift) y = x
    double den = a[0] - shift;
    if (den == 0.0) den = 1e-300;
    cp[0] = n > 1 ? b[0] / den : 0.0;
    dp[0] = x[0] / den;
    for (std::size_t i = 1; i < n; ++i) {
      den = a[i] - shift - b[i - 1] * cp[i - 1];
      if (den == 0.0) den = 1e-300;
      cp[i] = i + 1 < n ? b[i] / den : 0.0;
      dp[i] = (x[i] - b[i - 1] * dp[i - 1]) / den;
    }
    std::vector<double> y(n);
    y[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) y[i] = dp[i] - cp[i] * y[i + 1];
    double nrm = 0.0;
    for (double v : y) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!std::isfinite(nrm) || nrm == 0.0) throw EigenFailure("inverse iteration broke down");
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / nrm;
  }
  return x;
}

}  // namespace detail

/// The k smallest eigenvalues, ascending.
inline std::vector<double> eigen_bottom(const SectorOperator& op, int k) {
  if (k < 1) throw InvalidArgument("eigen_bottom: k must be >= 1");
  const std::size_t kk = std::min<std::size_t>(k, op.size());
  std::vector<double> ev(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    ev[i] = detail::kth_eigenvalue(op.diag, op.off, i);
    if (!std::isfinite(ev[i])) throw EigenFailure("eigen_bottom: bisection did not converge");
  }
  return ev;
}

/// Eigenvector (nodal values f, unit weighted norm, positive at its largest entry) of
/// the i-th smallest eigenvalue.
inline std::vector<double> eigenvector(const SectorOperator& op, int i) {
  const double lambda = detail::kth_eigenvalue(op.diag, op.off, static_cast<std::size_t>(i));
  auto g = detail::inverse_iteration(op.diag, op.off, lambda);
  std::size_t arg = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] /= std::sqrt(op.weights[j]);
    if (std::abs(g[j]) > std::abs(g[arg])) arg = j;
  }
  const double nrm = std::sqrt(op.weighted_norm_sq(g)) * (g[arg] < 0 ? -1.0 : 1.0);
  for (double& v : g) v /= nrm;
  return g;
}

/// Number of eigenvalues below -zero_tol (Sturm count). Eigenvalues inside
/// [-zero_tol, zero_tol] are kernel modes, not negative directions.
inline int negative_count(const SectorOperator& op, double zero_tol = 0.0) {
  return static_cast<int>(detail::sturm_count(op.diag, op.off, -zero_tol));
}

/// Samples of the exact kernel candidates on the operator's unknowns: phi for (L2, 0)
/// and phi' for (L1, 1).
inline std::vector<double> kernel_candidate(const SolitonProfile& profile, const SectorOperator& op) {
  std::vector<double> f(op.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const int j = op.first + static_cast<int>(i);
    f[i] = op.kind == OperatorKind::L2 ? profile.values[j] : profile.derivs[j];
  }
  return f;
}

struct SectorSummary {
  OperatorKind kind;
  int ell;
  std::vector<double> eigenvalues;
  int negative_count = 0;
  std::optional<double> kernel_residual;    // ||op k|| / ||k|| for the known kernel mode
  std::optional<double> kernel_similarity;  // |cos| between the kernel mode and the lowest eigenvector
  double spectral_gap = 0.0;                // distance from 0 to the nearest non-kernel eigenvalue
};

struct SpectralReport {
  double omega = 0.0;
  int dim = 0;
  double zero_tol = 0.0;
  std::vector<SectorSummary> sectors;

  const SectorSummary& at(OperatorKind k, int ell) const {
    for (const auto& s : sectors)
      if (s.kind == k && s.ell == ell) return s;
    throw InvalidArgument("SpectralReport: sector not computed");
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"omega", omega}, {"dim", dim}, {"zero_tol", zero_tol}, {"sectors", nlohmann::json::array()}};
    for (const auto& s : sectors) {
      nlohmann::json e = {{"omega", omega},
                          {"dim", dim},
                          {"kind", to_string(s.kind)},
                          {"ell", s.ell},
                          {"eigenvalues", s.eigenvalues},
                          {"negative_count", s.negative_count},
                          {"spectral_gap", s.spectral_gap}};
      e["kernel_residual"] = s.kernel_residual ? nlohmann::json(*s.kernel_residual) : nlohmann::json(nullptr);
      e["kernel_similarity"] = s.kernel_similarity ? nlohmann::json(*s.kernel_similarity) : nlohmann::json(nullptr);
      j["sectors"].push_back(std::move(e));
    }
    return j;
  }
};

inline SectorSummary summarize_sector(const SolitonProfile& profile, OperatorKind kind, int ell, int k,
                                      double zero_tol) {
  const auto op = build_sector(profile, ell, kind);
  SectorSummary s{kind, ell, eigen_bottom(op, k), negative_count(op, zero_tol), std::nullopt, std::nullopt, 0.0};
  const bool has_kernel = (kind == OperatorKind::L2 && ell == 0) || (kind == OperatorKind::L1 && ell == 1);
  if (has_kernel) {
    const auto f = kernel_candidate(profile, op);
    s.kernel_residual = op.residual(f);
    const auto v = eigenvector(op, 0);
    double dot = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) dot += op.weights[i] * f[i] * v[i];
    s.kernel_similarity = std::abs(dot) / std::sqrt(op.weighted_norm_sq(f) * op.weighted_norm_sq(v));
  }
  double gap = INFINITY;
  for (double e : s.eigenvalues)
    if (std::abs(e) > zero_tol) gap = std::min(gap, std::abs(e));
  s.spectral_gap = gap;
  return s;
}

/// L1 at ell = 0, 1, 2 and L2 at ell = 0, 1.
inline SpectralReport spectral_report(const SolitonProfile& profile, int k = 4, double zero_tol = 1e-4) {
  SpectralReport r{profile.omega, profile.dim, zero_tol, {}};
  for (int ell : {0, 1, 2}) r.sectors.push_back(summarize_sector(profile, OperatorKind::L1, ell, k, zero_tol));
  for (int ell : {0, 1}) r.sectors.push_back(summarize_sector(profile, OperatorKind::L2, ell, k, zero_tol));
  return r;
}

struct AssumptionCheck {
  bool passed = false;
  std::string reason;  // first failed condition, empty when passed
  SpectralReport report;
};

/// One simple negative L1 mode at ell = 0, L1 kernel phi' at ell = 1, L2 kernel phi at
/// ell = 0, and positivity at ell = 2.
inline AssumptionCheck check_assumption(const SolitonProfile& profile, double zero_tol = 1e-4,
                                        double kernel_tol = 1e-4) {
  AssumptionCheck c{false, "", spectral_report(profile, 4, zero_tol)};
  const auto& l10 = c.report.at(OperatorKind::L1, 0);
  const auto& l11 = c.report.at(OperatorKind::L1, 1);
  const auto& l12 = c.report.at(OperatorKind::L1, 2);
  const auto& l20 = c.report.at(OperatorKind::L2, 0);
  if (l10.negative_count != 1) c.reason = "L1 ell=0 negative count is " + std::to_string(l10.negative_count);
  else if (!(std::abs(l11.eigenvalues[0]) <= zero_tol)) c.reason = "L1 ell=1 lowest eigenvalue is not near 0";
  else if (!(*l11.kernel_residual <= kernel_tol)) c.reason = "L1 ell=1 residual of phi' too large";
  else if (!(l12.eigenvalues[0] > zero_tol)) c.reason = "L1 ell=2 is not positive";
  else if (!(std::abs(l20.eigenvalues[0]) <= zero_tol)) c.reason = "L2 ell=0 lowest eigenvalue is not near 0";
  else if (!(*l20.kernel_residual <= kernel_tol)) c.reason = "L2 ell=0 residual of phi too large";
  else if (l20.negative_count != 0) c.reason = "L2 ell=0 has negative eigenvalues";
  c.passed = c.reason.empty();
  return c;
}

enum class DeltaConvention {
  Cited,   // -1/2 delta'' - (1/r) delta' + V delta = 0
  Doubled  // -1/2 delta'' - ((d-1)/r) delta' + V delta = 0
};

inline const char* to_string(DeltaConvention c) { return c == DeltaConvention::Cited ? "cited" : "doubled"; }

struct DeltaTrajectory {
  DeltaConvention convention;
  std::vector<double> r;
  std::vector<double> delta;
  std::vector<double> ddelta;
  bool diverges_negative = false;
  std::optional<double> sign_change_radius;
};

/// delta'' = -(2c/r) delta' + 2 (5 phi^4 - 3 phi^2 + omega) delta, delta(0) = 1, delta'(0) = 0,
/// with c = 1 (cited) or c = d - 1 (doubled), sampled every `dr`. r_max <= 0 selects twice
/// the profile's radial extent, where the growing mode e^{kappa r} dominates.
inline DeltaTrajectory delta_ode(const SolitonProfile& profile, double r_max, DeltaConvention conv,
                                 double dr = 0.01) {
  if (!(r_max > 0.0)) r_max = 2.0 * profile.grid.r_max();
  if (!(dr > 0.0)) throw InvalidArgument("delta_ode: dr must be positive");
  const double c = conv == DeltaConvention::Cited ? 1.0 : profile.dim - 1.0;
  const double w = profile.omega;
  const double q = profile.quintic;
  auto pot = [&](double r) {
    const double p2 = profile.value_at(r) * profile.value_at(r);
    return 5.0 * q * p2 * p2 - 3.0 * p2 + w;
  };
  auto rhs = [&](double r, const std::array<double, 2>& y) -> std::array<double, 2> {
    if (r == 0.0) return {y[1], 2.0 * pot(0.0) * y[0] / (1.0 + 2.0 * c)};
    return {y[1], -2.0 * c / r * y[1] + 2.0 * pot(r) * y[0]};
  };
  DeltaTrajectory t{conv, {}, {}, {}, false, std::nullopt};
  std::array<double, 2> y{1.0, 0.0};
  double h = dr;
  const ode::Tolerance tol{1e-10, 1e-14, 1e-12};
  const long steps = static_cast<long>(std::ceil(r_max / dr - 1e-9));
  t.r.push_back(0.0);
  t.delta.push_back(1.0);
  t.ddelta.push_back(0.0);
  for (long s = 1; s <= steps; ++s) {
    const double r0 = (s - 1) * dr, r1 = std::min(s * dr, r_max);
    ode::advance<2>(rhs, r0, r1, y, h, tol, [](double, const std::array<double, 2>&) { return false; });
    if (!std::isfinite(y[0])) throw ConvergenceFailure("delta_ode: solution overflowed");
    if (!t.sign_change_radius && t.delta.back() > 0.0 && y[0] <= 0.0) {
      const double a = t.delta.back(), b = y[0];
      t.sign_change_radius = r0 + (r1 - r0) * a / (a - b);
    }
    t.r.push_back(r1);
    t.delta.push_back(y[0]);
    t.ddelta.push_back(y[1]);
  }
  const std::size_t n = t.delta.size();
  bool decreasing = true;
  for (std::size_t i = n - n / 4; i < n; ++i)
    if (t.delta[i] >= t.delta[i - 1]) decreasing = false;
  t.diverges_negative = t.delta.back() < -1.0 && decreasing;
  return t;
}

/// Grillakis-Shatah-Strauss verdict from the sign of dM/domega, after the spectral
/// assumption has been checked at omega.
inline Verdict gss_verdict(const MassCurve& curve, double omega, const AssumptionCheck& check,
                           double slope_tol = 1e-3) {
  if (!check.passed) throw AssumptionViolated("spectral assumption fails at omega = " + std::to_string(omega) + ": " +
                                              check.reason);
  if (curve.omegas.empty() || !(omega > curve.omegas.front()) || !(omega < curve.omegas.back()))
    throw InvalidArgument("gss_verdict: omega must lie inside the sampled range");
  const double s = curve.slope_at(omega);
  if (s > slope_tol) return Verdict::Stable;
  if (s < -slope_tol) return Verdict::Unstable;
  return Verdict::Inconclusive;
}

/// Same, running the spectral check on a freshly shot profile.
inline Verdict gss_verdict(const MassCurve& curve, double omega, const ShootingParams& params = {},
                           double slope_tol = 1e-3) {
  const auto profile = shoot_radial(omega, curve.dim, params);
  return gss_verdict(curve, omega, check_assumption(profile), slope_tol);
}

}  // namespace cqnls
