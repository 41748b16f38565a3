#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/fft.hpp"
#include "cqnls/grid.hpp"

namespace cqnls {

using cplx = std::complex<double>;

/// A complex wavefunction sampled on a UniformGrid, tagged with the time it represents.
class ComplexField {
 public:
  ComplexField(UniformGrid grid, std::vector<cplx> values, double time = 0.0)
      : grid_(grid), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size()) throw InvalidField("ComplexField: value count does not match grid size");
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw InvalidField("ComplexField: non-finite sample");
  }

  /// Zero field on `grid`.
  explicit ComplexField(UniformGrid grid, double time = 0.0)
      : grid_(grid), values_(grid.size(), cplx{0.0, 0.0}), time_(time) {}

  /// Samples f(x) at every node; f receives the coordinate array (unused axes are 0).
  template <class F>
  static ComplexField sample(const UniformGrid& grid, F&& f, double time = 0.0) {
    std::vector<cplx> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto idx = grid.unflatten(i);
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coordinate(idx[a]);
      v[i] = cplx(f(x));
    }
    return ComplexField(grid, std::move(v), time);
  }

  const UniformGrid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  const std::vector<cplx>& data() const noexcept { return values_; }
  double time() const noexcept { return time_; }
  std::size_t size() const noexcept { return values_.size(); }
  const cplx& operator[](std::size_t i) const noexcept { return values_[i]; }

  ComplexField with_values(std::vector<cplx> v) const { return ComplexField(grid_, std::move(v), time_); }
  ComplexField with_time(double t) const { return ComplexField(grid_, values_, t); }

  ComplexField scaled(cplx c) const {
    std::vector<cplx> v(values_);
    for (auto& x : v) x *= c;
    return ComplexField(grid_, std::move(v), time_);
  }

 private:
  UniformGrid grid_;
  std::vector<cplx> values_;
  double time_;
};

inline void require_finite(const ComplexField& f) {
  for (const auto& v : f.values())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidField("non-finite field sample");
}

/// FFT-ordered wavenumbers 2*pi*m/L, m = 0..N/2-1, -N/2..-1 (identical on every axis).
inline std::vector<double> wavenumbers(const UniformGrid& grid) {
  const int n = grid.points();
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / grid.extent();
  for (int m = 0; m < n; ++m) k[m] = dk * (m < n / 2 ? m : m - n);
  return k;
}

/// |k|^2 at every Fourier index, same layout as the field.
inline std::vector<double> wavenumber_sq(const UniformGrid& grid) {
  const auto k = wavenumbers(grid);
  std::vector<double> k2(grid.size());
  for (std::size_t i = 0; i < k2.size(); ++i) {
    auto idx = grid.unflatten(i);
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) s += k[idx[a]] * k[idx[a]];
    k2[i] = s;
  }
  return k2;
}

/// Largest resolved wavenumber pi/h.
inline double max_wavenumber(const UniformGrid& grid) { return std::numbers::pi / grid.spacing(); }

/// Quadrature h^d * sum f_j over raw values.
template <class F>
inline double grid_sum(const UniformGrid& grid, std::span<const cplx> v, F&& f) {
  double s = 0.0;
  for (const auto& z : v) s += f(z);
  return s * grid.cell_volume();
}

/// (h^d sum |u|^p)^(1/p), or max |u| for p = infinity.
inline double lp_norm(const ComplexField& field, double p) {
  require_finite(field);
  if (std::isinf(p) && p > 0) {
    double m = 0.0;
    for (const auto& z : field.values()) m = std::max(m, std::abs(z));
    return m;
  }
  if (!(p >= 1.0)) throw InvalidArgument("lp_norm: p must be >= 1");
  if (p == 2.0) return std::sqrt(grid_sum(field.grid(), field.values(), [](cplx z) { return std::norm(z); }));
  const double s = grid_sum(field.grid(), field.values(), [p](cplx z) { return std::pow(std::abs(z), p); });
  return std::pow(s, 1.0 / p);
}

/// Integral of |u|^p (p-th power of the L^p norm) without the root.
inline double lp_power(const ComplexField& field, int p) {
  return grid_sum(field.grid(), field.values(), [p](cplx z) {
    const double a2 = std::norm(z);
    switch (p) {
      case 2: return a2;
      case 4: return a2 * a2;
      case 6: return a2 * a2 * a2;
      default: return std::pow(a2, 0.5 * p);
    }
  });
}

inline double mass(const ComplexField& field) { return lp_power(field, 2); }

/// Forward transform of a copy of the field.
inline std::vector<cplx> spectrum(const ComplexField& field) {
  std::vector<cplx> v(field.data());
  fft::forward(field.grid(), v);
  return v;
}

/// ||grad u||^2 via the Fourier multiplier |k|^2 (Parseval on the grid).
inline double gradient_norm_sq(const ComplexField& field) {
  require_finite(field);
  const auto& g = field.grid();
  const auto uh = spectrum(field);
  const auto k2 = wavenumber_sq(g);
  double s = 0.0;
  for (std::size_t i = 0; i < uh.size(); ++i) s += k2[i] * std::norm(uh[i]);
  return s * g.cell_volume() / static_cast<double>(g.size());
}

/// Spectral partial derivative along `axis`.
inline std::vector<cplx> spectral_derivative(const ComplexField& field, int axis) {
  const auto& g = field.grid();
  auto uh = spectrum(field);
  const auto k = wavenumbers(g);
  const int n = g.points();
  for (std::size_t i = 0; i < uh.size(); ++i) {
    auto idx = g.unflatten(i);
    // the Nyquist mode has no consistent odd derivative
    const double kk = idx[axis] == n / 2 ? 0.0 : k[idx[axis]];
    uh[i] *= cplx(0.0, kk);
  }
  fft::inverse(g, uh);
  return uh;
}

/// Spectral Laplacian.
inline std::vector<cplx> spectral_laplacian(const ComplexField& field) {
  const auto& g = field.grid();
  auto uh = spectrum(field);
  const auto k2 = wavenumber_sq(g);
  for (std::size_t i = 0; i < uh.size(); ++i) uh[i] *= -k2[i];
  fft::inverse(g, uh);
  return uh;
}

/// E(u) = 1/2 ||grad u||^2 - 1/2 ||u||_4^4 + 1/3 ||u||_6^6.
inline double energy(const ComplexField& field) {
  return 0.5 * gradient_norm_sq(field) - 0.5 * lp_power(field, 4) + lp_power(field, 6) / 3.0;
}

/// L^2 inner product <a, b> = h^d sum conj(a) b.
inline cplx inner(const ComplexField& a, const ComplexField& b) {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * a.grid().cell_volume();
}

/// H^1 norm with symbol sqrt(1 + |k|^2).
inline double h1_norm(const ComplexField& field) {
  return std::sqrt(mass(field) + gradient_norm_sq(field));
}

inline ComplexField operator-(const ComplexField& a, const ComplexField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("field difference: grids differ");
  std::vector<cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return ComplexField(a.grid(), std::move(v), a.time());
}

inline ComplexField operator+(const ComplexField& a, const ComplexField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("field sum: grids differ");
  std::vector<cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
  return ComplexField(a.grid(), std::move(v), a.time());
}

/// Translation by an arbitrary vector via the Fourier shift theorem: returns u(x - y).
inline ComplexField translated(const ComplexField& field, std::span<const double> shift) {
  const auto& g = field.grid();
  auto uh = spectrum(field);
  const auto k = wavenumbers(g);
  const int n = g.points();
  for (std::size_t i = 0; i < uh.size(); ++i) {
    auto idx = g.unflatten(i);
    double phase = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      if (idx[a] == n / 2) continue;
      phase -= k[idx[a]] * shift[a];
    }
    uh[i] *= std::polar(1.0, phase);
  }
  fft::inverse(g, uh);
  return field.with_values(std::move(uh));
}

}  // namespace cqnls
