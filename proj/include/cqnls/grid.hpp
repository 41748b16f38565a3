#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cqnls/errors.hpp"

namespace cqnls {

/// Periodic Cartesian box [-L/2, L/2)^d sampled with N points per axis.
/// Storage order of every field on the grid is row-major, last axis fastest.
class UniformGrid {
 public:
  UniformGrid(int dim, double extent, int points) : dim_(dim), extent_(extent), points_(points) {
    if (dim < 1 || dim > 3) throw InvalidArgument("UniformGrid: dim must be 1, 2 or 3");
    if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("UniformGrid: extent must be positive");
    if (!fft_friendly(points))
      throw InvalidArgument("UniformGrid: points per axis must be even, >= 8 and have no prime factor above 5");
    spacing_ = extent / points;  // exact for powers of two
    if (spacing_ * points != extent)
      throw InvalidArgument("UniformGrid: extent / points is not exactly representable; pick L so that h * N == L");
  }

  /// Even N >= 8 of the form 2^a 3^b 5^c (powers of two are the usual choice).
  static bool fft_friendly(int n) noexcept {
    if (n < 8 || n % 2 != 0) return false;
    for (int p : {2, 3, 5})
      while (n % p == 0) n /= p;
    return n == 1;
  }

  int dim() const noexcept { return dim_; }
  double extent() const noexcept { return extent_; }
  int points() const noexcept { return points_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept {
    std::size_t n = 1;
    for (int a = 0; a < dim_; ++a) n *= static_cast<std::size_t>(points_);
    return n;
  }
  /// Volume element h^d of the quadrature rule.
  double cell_volume() const noexcept { return std::pow(spacing_, dim_); }
  double volume() const noexcept { return std::pow(extent_, dim_); }

  /// Coordinate of index j along any axis.
  double coordinate(int j) const noexcept { return -0.5 * extent_ + j * spacing_; }

  /// Per-axis indices of a flat index.
  std::array<int, 3> unflatten(std::size_t flat) const noexcept {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % points_);
      flat /= points_;
    }
    return idx;
  }

  /// Squared distance of a flat index to the box centre.
  double radius_sq(std::size_t flat) const noexcept {
    auto idx = unflatten(flat);
    double r2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      const double x = coordinate(idx[a]);
      r2 += x * x;
    }
    return r2;
  }

  bool operator==(const UniformGrid& o) const noexcept {
    return dim_ == o.dim_ && extent_ == o.extent_ && points_ == o.points_;
  }

 private:
  int dim_;
  double extent_;
  int points_;
  double spacing_;
};

/// Vertex-centred half-line grid r_j = j*dr, j = 0..n-1, r_{n-1} = r_max.
class RadialGrid {
 public:
  RadialGrid(double r_max, int n) : r_max_(r_max), n_(n) {
    if (!(r_max > 0.0)) throw InvalidArgument("RadialGrid: r_max must be positive");
    if (n < 3) throw InvalidArgument("RadialGrid: need at least 3 nodes");
    dr_ = r_max / (n - 1);
  }
  /// Grid with a fixed spacing and a given node count.
  static RadialGrid with_spacing(double dr, int n) { return RadialGrid(dr * (n - 1), n); }

  double r_max() const noexcept { return r_max_; }
  int size() const noexcept { return n_; }
  double spacing() const noexcept { return dr_; }
  double node(int j) const noexcept { return j == n_ - 1 ? r_max_ : j * dr_; }
  std::vector<double> nodes() const {
    std::vector<double> r(n_);
    for (int j = 0; j < n_; ++j) r[j] = node(j);
    return r;
  }

 private:
  double r_max_;
  int n_;
  double dr_;
};

/// Surface area of the unit sphere S^{d-1} (2 for d = 1, counting both half-lines).
inline double unit_sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw InvalidArgument("unit_sphere_area: dim must be 1, 2 or 3");
  }
}

}  // namespace cqnls
