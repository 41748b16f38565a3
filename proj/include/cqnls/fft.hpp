#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <tuple>

#include "cqnls/grid.hpp"

namespace cqnls::fft {

namespace detail {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;  // (dim, N, sign)
  int threads = 1;
  bool threads_initialised = false;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

inline PlanCache& cache() {
  static PlanCache c;
  return c;
}

// In-place, unaligned plans can be executed on any buffer of the right length.
inline fftw_plan plan_for(const UniformGrid& grid, int sign) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  const auto key = std::make_tuple(grid.dim(), grid.points(), sign);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  if (!c.threads_initialised) {
    fftw_init_threads();
    c.threads_initialised = true;
  }
  fftw_plan_with_nthreads(c.threads);
  int n[3] = {grid.points(), grid.points(), grid.points()};
  fftw_complex* scratch = fftw_alloc_complex(grid.size());
  fftw_plan p = fftw_plan_dft(grid.dim(), n, scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  c.plans.emplace(key, p);
  return p;
}

}  // namespace detail

/// Number of threads used by plans created after this call. Existing plans keep theirs.
inline void set_threads(int threads) {
  auto& c = detail::cache();
  std::lock_guard lock(c.mutex);
  c.threads = threads < 1 ? 1 : threads;
}

/// Unnormalised forward transform: u_hat_m = sum_j u_j exp(-i k_m x_j).
inline void forward(const UniformGrid& grid, std::span<std::complex<double>> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::plan_for(grid, FFTW_FORWARD), p, p);
}

/// Inverse transform including the 1/N^d factor.
inline void inverse(const UniformGrid& grid, std::span<std::complex<double>> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::plan_for(grid, FFTW_BACKWARD), p, p);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

}  // namespace cqnls::fft
