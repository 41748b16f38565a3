#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqnls/errors.hpp"
#include "cqnls/field.hpp"
#include "cqnls/field_io.hpp"

namespace cqnls {

struct EvolveConfig {
  double dt = 1e-3;
  double t_end = 1.0;  // absolute final time; the run starts at the field's time tag
  int callback_stride = 1;
  bool dealias = false;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  double checkpoint_interval = 0.0;      // wall-clock seconds between checkpoints

  /// Number of steps from t0 to t_end; throws if not an integer within rounding.
  long steps_from(double t0) const {
    validate();
    const double q = (t_end - t0) / dt;
    const double n = std::round(q);
    if (n < 0.0 || std::abs(q - n) > 1e-9 * std::max(1.0, std::abs(q)))
      throw InvalidArgument("EvolveConfig: (t_end - t0)/dt must be a non-negative integer");
    return static_cast<long>(n);
  }

  void validate() const {
    if (!(dt != 0.0) || !std::isfinite(dt)) throw InvalidArgument("EvolveConfig: dt must be non-zero and finite");
    if (!std::isfinite(t_end)) throw InvalidArgument("EvolveConfig: t_end must be finite");
    if (callback_stride < 1) throw InvalidArgument("EvolveConfig: callback_stride must be >= 1");
    if (checkpoint_interval < 0.0) throw InvalidArgument("EvolveConfig: checkpoint_interval must be >= 0");
  }

  /// Explicit-scheme guidance h^2 (the split-step scheme itself is unconditionally stable).
  static double stability_guidance(const UniformGrid& g) { return g.spacing() * g.spacing(); }

  nlohmann::json to_json(const UniformGrid& g) const {
    return {{"dt", dt},
            {"t_end", t_end},
            {"callback_stride", callback_stride},
            {"dealias", dealias},
            {"dt_guidance_h2", stability_guidance(g)}};
  }
};

namespace detail {

/// Split-step workspace: kinetic multipliers cached per sub-step length.
class Stepper {
 public:
  Stepper(const UniformGrid& grid, bool dealias) : grid_(grid), k2_(wavenumber_sq(grid)) {
    if (dealias) {
      const auto k = wavenumbers(grid);
      const double cut = (2.0 / 3.0) * max_wavenumber(grid);
      mask_.assign(grid.size(), 1.0);
      for (std::size_t i = 0; i < mask_.size(); ++i) {
        auto idx = grid.unflatten(i);
        for (int a = 0; a < grid.dim(); ++a)
          if (std::abs(k[idx[a]]) > cut) mask_[i] = 0.0;
      }
    }
  }

  void kinetic(std::vector<cplx>& u, double tau) {
    auto& m = multiplier(tau);
    const long double before = mask_.empty() ? norm_sq(u) : 0.0L;
    fft::forward(grid_, u);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= m[i];
    fft::inverse(grid_, u);
    // the FFT round trip carries a small one-sided rounding bias in the norm
    if (mask_.empty() && before > 0.0L) {
      const double c = static_cast<double>(std::sqrt(before / norm_sq(u)));
      for (auto& z : u) z *= c;
    }
  }

  // exact: |u| is invariant under the nonlinear sub-flow
  void nonlinear(std::vector<cplx>& u, double tau, double t) const {
    for (auto& z : u) {
      const double a2 = std::norm(z);
      if (!std::isfinite(a2)) throw NumericalBlowup("non-finite field at t = " + io::fmt(t));
      z *= std::polar(1.0, -tau * (a2 * a2 - a2));
    }
  }

 private:
  static long double norm_sq(const std::vector<cplx>& u) {
    long double s = 0.0L;
    for (const auto& z : u) s += static_cast<long double>(std::norm(z));
    return s;
  }

  const std::vector<cplx>& multiplier(double tau) {
    auto it = cache_.find(tau);
    if (it != cache_.end()) return it->second;
    std::vector<cplx> m(k2_.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = std::polar(1.0, -0.5 * tau * k2_[i]);
      if (!mask_.empty()) m[i] *= mask_[i];
    }
    return cache_.emplace(tau, std::move(m)).first->second;
  }

  UniformGrid grid_;
  std::vector<double> k2_;
  std::vector<double> mask_;
  std::map<double, std::vector<cplx>> cache_;
};

}  // namespace detail

/// One Strang step: half kinetic, full nonlinear phase, half kinetic.
inline ComplexField strang_step(const ComplexField& field, double dt, bool dealias = false) {
  detail::Stepper s(field.grid(), dealias);
  std::vector<cplx> u(field.data());
  s.kinetic(u, 0.5 * dt);
  s.nonlinear(u, dt, field.time());
  s.kinetic(u, 0.5 * dt);
  for (const auto& z : u)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericalBlowup("non-finite field at t = " + io::fmt(field.time() + dt));
  return ComplexField(field.grid(), std::move(u), field.time() + dt);
}

/// Named scalar functional sampled during a run.
struct Observer {
  std::string name;
  std::function<double(const ComplexField&)> fn;
};

struct EvolveResult {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> series;
  ComplexField final_state;
};

/// Steps from field.time() to config.t_end. Observers (and `on_sample`, which sees
/// the full snapshot) run at the start, every callback_stride steps, and at the end.
inline EvolveResult evolve(const ComplexField& field, const EvolveConfig& config,
                           const std::vector<Observer>& observers = {},
                           const std::function<void(const ComplexField&)>& on_sample = {}) {
  const long n = config.steps_from(field.time());
  const double t0 = field.time();
  const double dt = config.dt;
  detail::Stepper stepper(field.grid(), config.dealias);
  EvolveResult out{{}, {}, field};
  for (const auto& o : observers) out.series[o.name];

  auto observe = [&](const ComplexField& f) {
    out.times.push_back(f.time());
    for (const auto& o : observers) out.series[o.name].push_back(o.fn(f));
    if (on_sample) on_sample(f);
  };

  using clock = std::chrono::steady_clock;
  auto last_checkpoint = clock::now();
  const bool checkpoints = !config.checkpoint_dir.empty() && config.checkpoint_interval > 0.0;
  auto maybe_checkpoint = [&](const ComplexField& f, long step) {
    if (!checkpoints) return;
    const auto now = clock::now();
    if (std::chrono::duration<double>(now - last_checkpoint).count() < config.checkpoint_interval) return;
    last_checkpoint = now;
    std::filesystem::create_directories(config.checkpoint_dir);
    nlohmann::json extra = {{"step", step},
                            {"config", config.to_json(f.grid())},
                            {"invariants", {{"mass", mass(f)}, {"energy", energy(f)}}}};
    io::write_field(config.checkpoint_dir / ("checkpoint_" + std::to_string(step)), f, extra);
  };

  observe(field);
  if (n == 0) return out;

  std::vector<cplx> u(field.data());
  stepper.kinetic(u, 0.5 * dt);
  for (long s = 1; s <= n; ++s) {
    const double t = t0 + s * dt;
    stepper.nonlinear(u, dt, t - dt);
    const bool sample = s == n || s % config.callback_stride == 0;
    const bool wall = checkpoints &&
                      std::chrono::duration<double>(clock::now() - last_checkpoint).count() >= config.checkpoint_interval;
    if (sample || wall) {
      stepper.kinetic(u, 0.5 * dt);
      for (const auto& z : u)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
          throw NumericalBlowup("non-finite field at t = " + io::fmt(t));
      ComplexField snap(field.grid(), u, t);
      if (sample) observe(snap);
      maybe_checkpoint(snap, s);
      if (s == n) {
        out.final_state = std::move(snap);
        break;
      }
      stepper.kinetic(u, 0.5 * dt);
    } else {
      stepper.kinetic(u, dt);
    }
  }
  return out;
}

/// Exact free flow e^{i t Lap/2}: multiplies Fourier coefficients by exp(-i t |k|^2 / 2).
inline ComplexField free_propagate(const ComplexField& field, double t) {
  if (t == 0.0) return field;
  auto uh = spectrum(field);
  const auto k2 = wavenumber_sq(field.grid());
  for (std::size_t i = 0; i < uh.size(); ++i) uh[i] *= std::polar(1.0, -0.5 * t * k2[i]);
  fft::inverse(field.grid(), uh);
  return ComplexField(field.grid(), std::move(uh), field.time() + t);
}

/// ||(x + i t grad) u||_2 with x measured from the box centre.
inline double galilean_norm_direct(const ComplexField& field, double t) {
  const auto& g = field.grid();
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<cplx> du;
    if (t != 0.0) du = spectral_derivative(field, a);
    for (std::size_t i = 0; i < field.size(); ++i) {
      const double x = g.coordinate(g.unflatten(i)[a]);
      cplx v = x * field[i];
      if (t != 0.0) v += cplx(0.0, t) * du[i];
      s += std::norm(v);
    }
  }
  return std::sqrt(s * g.cell_volume());
}

/// ||t grad(u e^{-i|x|^2/(2t)})||_2, equal to ||J(t)u||_2 when the chirp is resolved.
inline double galilean_norm_factored(const ComplexField& field, double t) {
  if (t == 0.0) throw InvalidArgument("galilean_norm_factored: t must be non-zero");
  const auto& g = field.grid();
  std::vector<cplx> v(field.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = field[i] * std::polar(1.0, -g.radius_sq(i) / (2.0 * t));
  return std::abs(t) * std::sqrt(gradient_norm_sq(ComplexField(g, std::move(v))));
}

/// ||J(t)u||_2, J(t) = x + i t grad. Uses the factorization
/// J(t)u = i t e^{i|x|^2/(2t)} grad(u e^{-i|x|^2/(2t)}) when the chirp's local
/// wavenumber |x|/|t| stays below half the grid cutoff over the field's support,
/// and multiplication by x plus the spectral gradient otherwise.
inline double galilean_norm(const ComplexField& field, double t) {
  if (t == 0.0) return galilean_norm_direct(field, 0.0);
  const auto& g = field.grid();
  double peak = 0.0;
  for (const auto& z : field.values()) peak = std::max(peak, std::abs(z));
  double support = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (std::abs(field[i]) > 1e-10 * peak) support = std::max(support, g.radius_sq(i));
  support = std::sqrt(support);
  if (support / std::abs(t) <= 0.5 * max_wavenumber(g)) return galilean_norm_factored(field, t);
  return galilean_norm_direct(field, t);
}

}  // namespace cqnls
