#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "cqnls/errors.hpp"

namespace cqnls::ode {

struct Tolerance {
  double rtol = 1e-12;
  double atol = 1e-16;
  double min_step = 1e-12;
};

/// Outcome of one interval of adaptive integration.
enum class Advance { Reached, Stopped };

/// Dormand-Prince 5(4) with PI-free classic step control. Integrates y' = f(r, y)
/// from r0 to r1 landing exactly on r1. After every accepted step `stop(r, y)` is
/// consulted; returning true ends integration early with y at that step.
/// `h` carries the step-size guess across calls.
template <std::size_t N, class F, class Stop>
Advance advance(F&& f, double r0, double r1, std::array<double, N>& y, double& h, const Tolerance& tol,
                Stop&& stop) {
  using V = std::array<double, N>;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = r1 - r0;
  const double dir = span >= 0 ? 1.0 : -1.0;
  if (span == 0.0) return Advance::Reached;
  if (!(h > 0.0)) h = std::abs(span);
  double r = r0;
  V k1 = f(r, y);
  while (dir * (r1 - r) > 0.0) {
    const bool last = h >= dir * (r1 - r);
    const double step = last ? r1 - r : dir * h;
    V tmp, k2, k3, k4, k5, k6, k7, yn;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + step * a21 * k1[i];
    k2 = f(r + c2 * step, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + step * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(r + c3 * step, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(r + c4 * step, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(r + c5 * step, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(r + step, tmp);
    for (std::size_t i = 0; i < N; ++i)
      yn[i] = y[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = f(r + step, yn);
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e =
          step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (err <= 1.0) {
      r = last ? r1 : r + step;
      y = yn;
      k1 = k7;
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      // a step clipped to the interval end must not shrink the guess
      h = last ? std::max(h, std::abs(step) * grow) : std::abs(step) * grow;
      if (stop(r, y)) return Advance::Stopped;
    } else {
      h = std::abs(step) * std::max(0.1, 0.9 * std::pow(err, -0.2));
      if (h < tol.min_step) throw ConvergenceFailure("adaptive integrator: step size collapsed");
    }
  }
  return Advance::Reached;
}

}  // namespace cqnls::ode
