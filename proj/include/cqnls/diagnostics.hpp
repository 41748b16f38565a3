#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/evolve.hpp"
#include "cqnls/field.hpp"
#include "cqnls/field_io.hpp"
#include "cqnls/groundstate.hpp"

namespace cqnls {

struct InvariantTriple {
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};

/// Momentum Im int conj(u) grad u, one component per axis (unused axes 0).
inline std::array<double, 3> momentum(const ComplexField& field) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = 0; a < field.grid().dim(); ++a) {
    const auto du = spectral_derivative(field, a);
    double s = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i) s += (std::conj(field[i]) * du[i]).imag();
    p[a] = s * field.grid().cell_volume();
  }
  return p;
}

inline InvariantTriple invariants(const ComplexField& field) {
  require_finite(field);
  return {mass(field), momentum(field), energy(field)};
}

/// Fraction of the mass outside the central half-box |x_a| < L/4.
inline double edge_mass_fraction(const ComplexField& field) {
  const auto& g = field.grid();
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double m = std::norm(field[i]);
    total += m;
    auto idx = g.unflatten(i);
    bool in = true;
    for (int a = 0; a < g.dim(); ++a)
      if (std::abs(g.coordinate(idx[a])) >= 0.25 * g.extent()) in = false;
    if (in) inside += m;
  }
  return total > 0.0 ? (total - inside) / total : 0.0;
}

inline void check_edge_mass(const ComplexField& field, double tol = 1e-6) {
  const double f = edge_mass_fraction(field);
  if (f > tol) throw EdgeMassWarning("mass outside the central half-box is " + io::fmt(f) + " of the total");
}

/// int |x|^2 |u|^2 with x measured from the box centre.
inline double virial(const ComplexField& field, bool check_edge = true) {
  if (check_edge) check_edge_mass(field);
  const auto& g = field.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) s += g.radius_sq(i) * std::norm(field[i]);
  return s * g.cell_volume();
}

/// 2 Im int conj(u) x . grad u.
inline double virial_rate(const ComplexField& field, bool check_edge = true) {
  if (check_edge) check_edge_mass(field);
  const auto& g = field.grid();
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const auto du = spectral_derivative(field, a);
    for (std::size_t i = 0; i < du.size(); ++i)
      s += g.coordinate(g.unflatten(i)[a]) * (std::conj(field[i]) * du[i]).imag();
  }
  return 2.0 * s * g.cell_volume();
}

/// Second time derivative of the virial obtained by differentiating virial_rate along
/// the flow: 2||grad u||^2 - d ||u||_4^4 + (4d/3) ||u||_6^6.
inline double virial_acceleration(const ComplexField& field) {
  const double d = field.grid().dim();
  return 2.0 * gradient_norm_sq(field) - d * lp_power(field, 4) + 4.0 * d / 3.0 * lp_power(field, 6);
}

/// The planar virial law in the form 2E + (2/3)||u||_6^6.
inline double virial_identity_2d(const ComplexField& field) {
  if (field.grid().dim() != 2) throw DimensionError("virial_identity_2d: field must be two-dimensional");
  return 2.0 * energy(field) + 2.0 / 3.0 * lp_power(field, 6);
}

/// P(t) = 1/2 ||J(t)u||^2 - t^2/2 ||u||_4^4 + t^2/3 ||u||_6^6 (planar exponents).
inline double pseudoconformal(const ComplexField& field, double t, int dim_flag = 2) {
  if (dim_flag != 2 || field.grid().dim() != 2)
    throw DimensionError("pseudoconformal: the law is stated for d = 2 only");
  const double j = galilean_norm(field, t);
  return 0.5 * j * j - 0.5 * t * t * lp_power(field, 4) + t * t / 3.0 * lp_power(field, 6);
}

/// max_k |dP/dt + (2t/3)||u||_6^6| / max|P| using centred differences at interior samples.
inline double pseudoconformal_rate_check(std::span<const double> t, std::span<const double> pconf,
                                         std::span<const double> l6) {
  if (t.size() != pconf.size() || t.size() != l6.size()) throw InvalidArgument("pseudoconformal_rate_check: length mismatch");
  if (t.size() < 3) throw NotEnoughData("pseudoconformal_rate_check: need at least 3 samples");
  double worst = 0.0, scale = 0.0;
  for (double p : pconf) scale = std::max(scale, std::abs(p));
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    const double dp = (pconf[k + 1] - pconf[k - 1]) / (t[k + 1] - t[k - 1]);
    worst = std::max(worst, std::abs(dp + 2.0 * t[k] / 3.0 * l6[k]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

/// ||u||_4^4 M(Q) / (M(u) ||grad u||^2); at most 1 in the plane.
inline double gn_ratio(const ComplexField& field, double q_mass) {
  if (field.grid().dim() != 2) throw DimensionError("gn_ratio: field must be two-dimensional");
  const double m = mass(field);
  const double g = gradient_norm_sq(field);
  if (!(m > 0.0) || !(g > 0.0)) throw Undefined("gn_ratio: undefined for zero or constant fields");
  return lp_power(field, 4) * q_mass / (m * g);
}

inline double weinstein_quotient(double m, double l4, double l6, double grad_sq) {
  if (!(l4 > 0.0)) throw Undefined("weinstein_quotient: undefined for the zero field");
  return std::sqrt(m) * std::pow(l6, 0.25) * std::pow(grad_sq, 0.75) / l4;
}

/// ||u||_2 ||u||_6^{3/2} ||grad u||_2^{3/2} / ||u||_4^4 on a 3D grid.
inline double weinstein_quotient_3d(const ComplexField& field) {
  if (field.grid().dim() != 3) throw DimensionError("weinstein_quotient_3d: field must be three-dimensional");
  return weinstein_quotient(mass(field), lp_power(field, 4), lp_power(field, 6), gradient_norm_sq(field));
}

/// Same quotient from a radial 3D profile's integrals.
inline double weinstein_quotient_3d(const SolitonProfile& p) {
  if (p.dim != 3) throw DimensionError("weinstein_quotient_3d: profile must be three-dimensional");
  return weinstein_quotient(p.mass, p.l4, p.l6, p.grad_sq);
}

struct ModulatedDistance {
  double distance = 0.0;
  double theta = 0.0;
  std::array<double, 3> shift{0.0, 0.0, 0.0};
};

/// inf over theta, y of ||u - e^{i theta} phi(. - y)||_{H^1}. Grid shifts are scanned by
/// an FFT cross-correlation in the H^1 inner product, refined by a quadratic fit per
/// axis, and the winning shift is evaluated exactly through its Fourier series.
inline ModulatedDistance modulated_distance(const ComplexField& field, const ComplexField& phi) {
  const auto& g = field.grid();
  if (!(g == phi.grid())) throw InvalidArgument("modulated_distance: grids differ");
  const int n = g.points();
  const auto k = wavenumbers(g);
  const auto k2 = wavenumber_sq(g);
  const auto uh = spectrum(field);
  const auto ph = spectrum(phi);
  const double norm = g.cell_volume() / static_cast<double>(g.size());
  std::vector<cplx> c(g.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = 1.0 + k2[i];
    c[i] = w * std::conj(ph[i]) * uh[i];
  }
  std::vector<cplx> corr(c);
  fft::inverse(g, corr);  // corr[m] = sum_j w conj(phi_{j-m}) u_j / h^d
  std::size_t best = 0;
  for (std::size_t i = 1; i < corr.size(); ++i)
    if (std::abs(corr[i]) > std::abs(corr[best])) best = i;

  auto wrap = [n](int m) { return ((m % n) + n) % n; };
  const auto bidx = g.unflatten(best);
  std::array<double, 3> y{0.0, 0.0, 0.0};
  auto flat = [&](std::array<int, 3> idx) {
    std::size_t f = 0;
    for (int a = 0; a < g.dim(); ++a) f = f * n + idx[a];
    return f;
  };
  for (int a = 0; a < g.dim(); ++a) {
    auto lo = bidx, hi = bidx;
    lo[a] = wrap(bidx[a] - 1);
    hi[a] = wrap(bidx[a] + 1);
    const double fm = std::abs(corr[flat(lo)]), f0 = std::abs(corr[best]), fp = std::abs(corr[flat(hi)]);
    const double den = fm - 2.0 * f0 + fp;
    double off = den < 0.0 ? 0.5 * (fm - fp) / den : 0.0;
    off = std::clamp(off, -0.5, 0.5);
    const int m = bidx[a] < n / 2 ? bidx[a] : bidx[a] - n;
    y[a] = (m + off) * g.spacing();
  }

  // phase k.y per mode, Nyquist modes untouched (matches `translated`)
  auto phase_of = [&](std::size_t i, const std::array<double, 3>& s) {
    auto idx = g.unflatten(i);
    double ph = 0.0;
    for (int a = 0; a < g.dim(); ++a)
      if (idx[a] != n / 2) ph += k[idx[a]] * s[a];
    return ph;
  };
  auto kk = [&](std::size_t i, int a) {
    const int j = g.unflatten(i)[a];
    return j == n / 2 ? 0.0 : k[j];
  };
  // Newton polish of |C(y)|^2 with C(y) = sum_k c_k e^{i k.y}
  const int d = g.dim();
  auto value_at = [&](const std::array<double, 3>& s) {
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < c.size(); ++i) acc += c[i] * std::polar(1.0, phase_of(i, s));
    return acc;
  };
  cplx cy = value_at(y);
  for (int it = 0; it < 8; ++it) {
    cplx c0{0.0, 0.0};
    std::array<cplx, 3> c1{};
    std::array<std::array<cplx, 3>, 3> c2{};
    for (std::size_t i = 0; i < c.size(); ++i) {
      const cplx e = c[i] * std::polar(1.0, phase_of(i, y));
      c0 += e;
      for (int a = 0; a < d; ++a) {
        c1[a] += cplx(0.0, kk(i, a)) * e;
        for (int b = 0; b <= a; ++b) c2[a][b] -= kk(i, a) * kk(i, b) * e;
      }
    }
    double grad[3] = {0, 0, 0}, hess[3][3] = {};
    for (int a = 0; a < d; ++a) {
      grad[a] = 2.0 * (std::conj(c0) * c1[a]).real();
      for (int b = 0; b <= a; ++b)
        hess[a][b] = hess[b][a] = 2.0 * (std::conj(c1[a]) * c1[b] + std::conj(c0) * c2[a][b]).real();
    }
    // solve hess * step = -grad by Gaussian elimination (d <= 3)
    double m[3][4];
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) m[a][b] = hess[a][b];
      m[a][3] = -grad[a];
    }
    bool ok = true;
    for (int p = 0; p < d && ok; ++p) {
      int piv = p;
      for (int r = p + 1; r < d; ++r)
        if (std::abs(m[r][p]) > std::abs(m[piv][p])) piv = r;
      if (std::abs(m[piv][p]) == 0.0) ok = false;
      else {
        std::swap(m[p], m[piv]);
        for (int r = p + 1; r < d; ++r) {
          const double f = m[r][p] / m[p][p];
          for (int col = p; col < d; ++col) m[r][col] -= f * m[p][col];
          m[r][3] -= f * m[p][3];
        }
      }
    }
    if (!ok) break;
    std::array<double, 3> step{0.0, 0.0, 0.0};
    for (int a = d - 1; a >= 0; --a) {
      double v = m[a][3];
      for (int b = a + 1; b < d; ++b) v -= m[a][b] * step[b];
      step[a] = v / m[a][a];
    }
    double len = 0.0;
    for (int a = 0; a < d; ++a) len = std::max(len, std::abs(step[a]));
    if (len > g.spacing()) break;
    std::array<double, 3> trial = y;
    for (int a = 0; a < d; ++a) trial[a] += step[a];
    const cplx ct = value_at(trial);
    if (!(std::abs(ct) >= std::abs(cy))) break;
    y = trial;
    cy = ct;
    if (len < 1e-14 * g.extent()) break;
  }

  ModulatedDistance out;
  out.theta = std::abs(cy) > 0.0 ? std::arg(cy) : 0.0;
  if (out.theta < 0.0) out.theta += 2.0 * std::numbers::pi;
  out.shift = y;
  const cplx rot = std::polar(1.0, out.theta);
  double dist = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    dist += (1.0 + k2[i]) * std::norm(uh[i] - rot * ph[i] * std::polar(1.0, -phase_of(i, y)));
  out.distance = std::sqrt(dist * norm);
  return out;
}

inline ModulatedDistance modulated_distance(const ComplexField& field, const SolitonProfile& profile) {
  return modulated_distance(field, to_field(profile, field.grid()));
}

/// Time series of named diagnostics with the fixed CSV column order.
struct DiagnosticsSeries {
  static constexpr std::array<const char*, 13> columns = {"t",      "mass",   "px",   "py",      "pz",
                                                          "energy", "virial", "l4q",  "l6s",     "ju_norm",
                                                          "pconf",  "gn_ratio", "mod_dist"};
  std::vector<double> times;
  std::vector<std::array<double, 12>> records;  // columns after t; NaN where not configured

  /// What to record beyond the invariants.
  struct Options {
    std::optional<double> q_mass;                // enables gn_ratio (d = 2)
    std::optional<ComplexField> reference;       // enables mod_dist
    bool pseudoconformal = true;                 // ju_norm always, pconf only in d = 2
  };

  static std::array<double, 12> sample(const ComplexField& f, const Options& opt) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 12> r;
    r.fill(nan);
    const auto inv = invariants(f);
    const double l4 = lp_power(f, 4), l6 = lp_power(f, 6);
    r[0] = inv.mass;
    for (int a = 0; a < 3; ++a) r[1 + a] = a < f.grid().dim() ? inv.momentum[a] : nan;
    r[4] = inv.energy;
    r[5] = virial(f, false);
    r[6] = l4;
    r[7] = l6;
    const double t = f.time();
    const double j = galilean_norm(f, t);
    r[8] = j;
    if (opt.pseudoconformal && f.grid().dim() == 2) r[9] = 0.5 * j * j - 0.5 * t * t * l4 + t * t / 3.0 * l6;
    if (opt.q_mass && f.grid().dim() == 2) r[10] = gn_ratio(f, *opt.q_mass);
    if (opt.reference) r[11] = modulated_distance(f, *opt.reference).distance;
    return r;
  }

  void push(const ComplexField& f, const Options& opt) {
    if (!times.empty() && !(f.time() > times.back()))
      throw InvalidArgument("DiagnosticsSeries: times must be strictly increasing");
    times.push_back(f.time());
    records.push_back(sample(f, opt));
  }

  std::vector<double> column(const std::string& name) const {
    for (std::size_t c = 1; c < columns.size(); ++c)
      if (name == columns[c]) {
        std::vector<double> v(records.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = records[i][c - 1];
        return v;
      }
    if (name == "t") return times;
    throw InvalidArgument("DiagnosticsSeries: unknown column " + name);
  }

  std::string to_csv() const {
    std::string s;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) s += ',';
      s += columns[c];
    }
    s += '\n';
    for (std::size_t i = 0; i < times.size(); ++i) {
      s += io::fmt(times[i]);
      for (double v : records[i]) s += ',' + io::fmt(v);
      s += '\n';
    }
    return s;
  }

  void write_csv(const std::filesystem::path& path) const { io::write_text(path, to_csv()); }
};

}  // namespace cqnls
