#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cqnls/errors.hpp"

namespace cqnls {

enum class Verdict { Stable, Unstable, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    default: return "Inconclusive";
  }
}

/// omega -> M(phi_omega) over a sweep. Failed points keep NaN mass and an error note.
struct MassCurve {
  int dim = 2;
  std::vector<double> omegas;
  std::vector<double> masses;
  std::vector<double> slopes;
  std::vector<Verdict> verdicts;
  std::vector<std::string> errors;  // empty string where the point succeeded

  std::size_t size() const { return omegas.size(); }

  /// Derivative at an arbitrary omega from the three-point Lagrange interpolant on the
  /// nearest valid samples (the centred difference at interior nodes).
  double slope_at(double omega) const {
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < omegas.size(); ++i)
      if (std::isfinite(masses[i])) ok.push_back(i);
    if (ok.size() < 3) throw NotEnoughData("MassCurve: need three valid samples for a slope");
    if (omega < omegas[ok.front()] || omega > omegas[ok.back()])
      throw InvalidArgument("MassCurve: omega outside the sampled range");
    std::size_t c = 1;
    double best = INFINITY;
    for (std::size_t j = 1; j + 1 < ok.size(); ++j) {
      const double dist = std::abs(omegas[ok[j]] - omega);
      if (dist < best) {
        best = dist;
        c = j;
      }
    }
    const double x0 = omegas[ok[c - 1]], x1 = omegas[ok[c]], x2 = omegas[ok[c + 1]];
    const double y0 = masses[ok[c - 1]], y1 = masses[ok[c]], y2 = masses[ok[c + 1]];
    const double x = omega;
    return y0 * ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)) +
           y1 * ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)) +
           y2 * ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
  }

  /// Recomputes `slopes` at every valid node.
  void compute_slopes() {
    slopes.assign(omegas.size(), NAN);
    std::size_t valid = 0;
    for (double m : masses) valid += std::isfinite(m) ? 1 : 0;
    if (valid < 3) return;
    for (std::size_t i = 0; i < omegas.size(); ++i)
      if (std::isfinite(masses[i])) slopes[i] = slope_at(omegas[i]);
  }
};

}  // namespace cqnls
