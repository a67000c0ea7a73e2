#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "core.hpp"

namespace axinsm {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution with new arrays is.
class PlanCache {
 public:
  enum Kind { rows_forward, rows_inverse, cube_forward, cube_inverse };

  static fftw_plan get(Kind kind, int count, int n) {
    static PlanCache cache;
    std::lock_guard lock(cache.mutex_);
    auto key = std::make_tuple(static_cast<int>(kind), count, n);
    if (auto it = cache.plans_.find(key); it != cache.plans_.end()) return it->second;
    fftw_plan plan = cache.make(kind, count, n);
    if (!plan) throw NumericalError("FFTW planning failed");
    cache.plans_.emplace(key, plan);
    return plan;
  }

 private:
  fftw_plan make(Kind kind, int count, int n) {
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int half = n / 2 + 1;
    switch (kind) {
      case rows_forward: {
        std::vector<double> in(static_cast<std::size_t>(count) * n);
        std::vector<cplx> out(static_cast<std::size_t>(count) * half);
        return fftw_plan_many_dft_r2c(1, &n, count, in.data(), nullptr, 1, n,
                                      reinterpret_cast<fftw_complex*>(out.data()), nullptr, 1, half, flags);
      }
      case rows_inverse: {
        std::vector<cplx> in(static_cast<std::size_t>(count) * half);
        std::vector<double> out(static_cast<std::size_t>(count) * n);
        return fftw_plan_many_dft_c2r(1, &n, count, reinterpret_cast<fftw_complex*>(in.data()), nullptr, 1, half,
                                      out.data(), nullptr, 1, n, flags);
      }
      case cube_forward:
      case cube_inverse: {
        std::vector<cplx> a(static_cast<std::size_t>(n) * n * n), b(a.size());
        return fftw_plan_dft_3d(n, n, n, reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(b.data()),
                                kind == cube_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
      }
    }
    return nullptr;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

// Axial Fourier coefficients of every radial row: modes m = 0..Nz/2.
struct AxialSpectrum {
  int rows = 0;
  int modes = 0;
  std::vector<cplx> coeffs;

  cplx& operator()(int i, int m) { return coeffs[static_cast<std::size_t>(i) * modes + m]; }
  cplx operator()(int i, int m) const { return coeffs[static_cast<std::size_t>(i) * modes + m]; }
};

inline AxialSpectrum axial_forward(const ScalarField2D& f) {
  const int rows = f.grid().rows(), n = f.Nz();
  AxialSpectrum s{rows, n / 2 + 1, std::vector<cplx>(static_cast<std::size_t>(rows) * (n / 2 + 1))};
  auto plan = detail::PlanCache::get(detail::PlanCache::rows_forward, rows, n);
  fftw_execute_dft_r2c(plan, const_cast<double*>(f.values().data()), reinterpret_cast<fftw_complex*>(s.coeffs.data()));
  return s;
}

inline ScalarField2D axial_inverse(AxialSpectrum s, const GridSpec& g, Parity parity) {
  ScalarField2D f(g, parity);
  const int n = g.Nz;
  auto plan = detail::PlanCache::get(detail::PlanCache::rows_inverse, s.rows, n);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(s.coeffs.data()), f.values().data());
  f *= 1.0 / n;
  f.enforce_parity();
  return f;
}

// Unnormalized 3D transforms on an n^3 cube, index (ix*n + iy)*n + iz.
inline std::vector<cplx> cube_forward(std::vector<cplx> data, int n) {
  std::vector<cplx> out(data.size());
  auto plan = detail::PlanCache::get(detail::PlanCache::cube_forward, 1, n);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

inline std::vector<cplx> cube_inverse(std::vector<cplx> data, int n) {
  std::vector<cplx> out(data.size());
  auto plan = detail::PlanCache::get(detail::PlanCache::cube_inverse, 1, n);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()), reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / (static_cast<double>(n) * n * n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace axinsm
