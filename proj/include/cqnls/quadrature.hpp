#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cqnls/grid.hpp"

namespace cqnls::quad {

/// Gregory rule on uniform nodes: trapezoid plus end corrections through fifth
/// differences. Exact for polynomials of degree <= 5 on each end block.
inline double gregory(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  double t = 0.5 * (f[0] + f[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) t += f[i];
  if (n < 12) return h * t;
  auto fd = [&](int order) {  // forward difference at the left end
    double d[6];
    for (int i = 0; i <= order; ++i) d[i] = f[i];
    for (int o = 0; o < order; ++o)
      for (int i = 0; i < order - o; ++i) d[i] = d[i + 1] - d[i];
    return d[0];
  };
  auto bd = [&](int order) {  // backward difference at the right end
    double d[6];
    for (int i = 0; i <= order; ++i) d[i] = f[n - 1 - i];
    for (int o = 0; o < order; ++o)
      for (int i = 0; i < order - o; ++i) d[i] = d[i] - d[i + 1];
    return d[0];
  };
  static constexpr double c[] = {1.0 / 12, 1.0 / 24, 19.0 / 720, 3.0 / 160, 863.0 / 60480};
  // T - h/12 (bd1 - fd1) - h/24 (bd2 + fd2) - 19h/720 (bd3 - fd3) - 3h/160 (bd4 + fd4) - 863h/60480 (bd5 - fd5)
  const double corr = c[0] * (bd(1) - fd(1)) + c[1] * (bd(2) + fd(2)) + c[2] * (bd(3) - fd(3)) + c[3] * (bd(4) + fd(4)) +
         c[4] * (bd(5) - fd(5));
  return h * (t - corr);
}

/// Integral over R^d of a radial function: |S^{d-1}| * int_0^rmax f(r) r^{d-1} dr.
inline double radial_integral(const RadialGrid& grid, std::span<const double> f, int dim) {
  std::vector<double> g(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double r = grid.node(static_cast<int>(j));
    g[j] = f[j] * (dim == 1 ? 1.0 : (dim == 2 ? r : r * r));
  }
  return unit_sphere_area(dim) * gregory(g, grid.spacing());
}

}  // namespace cqnls::quad
