#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "banded.hpp"
#include "calculus.hpp"
#include "fft.hpp"

namespace axinsm {

// Radial parts of the per-mode operators, assembled from the same stencils the
// explicit operators use so that implicit and explicit paths agree exactly.
struct RadialOperators {
  PentaMatrix vector_laplacian;  // lap_minus, unknowns i = 1..Nr-1
  PentaMatrix curl_curl;         // -d_r (1/r) d_r r, unknowns 1..Nr-1
  PentaMatrix grad_div;          // (1/r) d_r r d_r, unknowns 0..Nr-1, wide stencil
  PentaMatrix scalar_laplacian;  // compact d_rr + (1/r) d_r, unknowns 0..Nr-1
  double curl_curl_bound = 0;    // Gershgorin bound on the radial curl-curl spectrum
};

namespace detail {

inline PentaMatrix assemble(int Nr, double R, Parity in_parity, int lo, int hi,
                            const std::function<ScalarField2D(const ScalarField2D&)>& op) {
  GridSpec probe{Nr, 8, R, 1.0};
  const int n = hi - lo + 1;
  PentaMatrix m(n);
  for (int j = lo; j <= hi; ++j) {
    ScalarField2D e(probe, in_parity);
    for (int k = 0; k < probe.Nz; ++k) e(j, k) = 1.0;
    const ScalarField2D col = op(e);
    for (int i = std::max(lo, j - 2); i <= std::min(hi, j + 2); ++i) m.at(i - lo, j - lo) = col(i, 0);
  }
  return m;
}

inline RadialOperators build_radial(int Nr, double R) {
  RadialOperators ops;
  const int N = Nr;
  ops.vector_laplacian = assemble(N, R, Parity::odd, 1, N - 1, [](const ScalarField2D& f) { return lap_minus(f); });
  ops.curl_curl = assemble(N, R, Parity::odd, 1, N - 1, [](const ScalarField2D& f) {
    ScalarField2D g = radial_divergence(f);
    g.zero_wall();
    ScalarField2D out = ddr(g);
    out *= -1.0;
    return out;
  });
  ops.grad_div = assemble(N, R, Parity::even, 0, N - 1, [](const ScalarField2D& f) {
    ScalarField2D g = ddr(f);
    g.zero_wall();
    return radial_divergence(g);
  });

  const double dr = R / N;
  ops.scalar_laplacian = PentaMatrix(N);
  ops.scalar_laplacian.at(0, 0) = -4 / (dr * dr);
  ops.scalar_laplacian.at(0, 1) = 4 / (dr * dr);
  for (int i = 1; i < N; ++i) {
    const double r = i * dr, up = (r + 0.5 * dr) / (r * dr * dr), lo = (r - 0.5 * dr) / (r * dr * dr);
    ops.scalar_laplacian.at(i, i) = -(up + lo);
    ops.scalar_laplacian.at(i, i - 1) = lo;
    if (i + 1 < N) ops.scalar_laplacian.at(i, i + 1) = up;
  }

  for (int i = 0; i < ops.curl_curl.size(); ++i) {
    double sum = 0;
    for (double v : ops.curl_curl.row(i)) sum += std::abs(v);
    ops.curl_curl_bound = std::max(ops.curl_curl_bound, sum);
  }
  return ops;
}

}  // namespace detail

inline const RadialOperators& radial_operators(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::unique_ptr<RadialOperators>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{g.Nr, g.R}];
  if (!slot) slot = std::make_unique<RadialOperators>(detail::build_radial(g.Nr, g.R));
  return *slot;
}

// Symbol of the centred axial derivative: d_z -> i * axial_derivative_symbol.
inline double axial_derivative_symbol(const GridSpec& g, int m) {
  return std::sin(2 * pi * m / g.Nz) / g.dz();
}

// Symbol of the compact second difference: d_zz -> -axial_laplacian_symbol.
inline double axial_laplacian_symbol(const GridSpec& g, int m) {
  const double s = 2 * std::sin(pi * m / g.Nz) / g.dz();
  return s * s;
}

namespace detail {

// For every axial mode, solve matrix(m) x = rhs on rows lo..hi; other rows are 0.
inline ScalarField2D solve_modes(const ScalarField2D& rhs, Parity out_parity, int lo, int hi,
                                 const std::function<PentaMatrix(int)>& matrix, const char* what) {
  const GridSpec& g = rhs.grid();
  AxialSpectrum s = axial_forward(rhs);
  std::vector<cplx> column(hi - lo + 1);
  for (int m = 0; m < s.modes; ++m) {
    for (int i = lo; i <= hi; ++i) column[i - lo] = s(i, m);
    PentaLU(matrix(m), what, m).solve_in_place(column);
    for (int i = 0; i < s.rows; ++i) s(i, m) = (i >= lo && i <= hi) ? column[i - lo] : cplx{};
  }
  ScalarField2D out = axial_inverse(std::move(s), g, out_parity);
  for (int i = 0; i < lo; ++i)
    for (int k = 0; k < g.Nz; ++k) out(i, k) = 0;
  for (int i = hi + 1; i <= g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) out(i, k) = 0;
  return out;
}

}  // namespace detail

// psi / r for the given vorticity: the discrete vector Laplacian of psi/r equals -omega.
inline ScalarField2D stream_potential(const ScalarField2D& vorticity) {
  require_parity(vorticity, Parity::odd);
  const GridSpec& g = vorticity.grid();
  const auto& ops = radial_operators(g);
  ScalarField2D rhs = vorticity;
  rhs *= -1.0;
  return detail::solve_modes(rhs, Parity::odd, 1, g.Nr - 1,
                             [&](int m) { return ops.vector_laplacian.scaled_shift(1.0, -axial_laplacian_symbol(g, m)); },
                             "stream solve");
}

inline ScalarField2D multiply_by_r(const ScalarField2D& f) {
  ScalarField2D out = f;
  for (int i = 0; i <= f.Nr(); ++i)
    for (int k = 0; k < f.Nz(); ++k) out(i, k) *= f.grid().r(i);
  out.enforce_parity();
  return out;
}

// Discrete d_rr psi - (1/r) d_r psi + d_zz psi, i.e. r * lap_minus(psi / r).
inline ScalarField2D stream_operator(const ScalarField2D& psi) {
  ScalarField2D phi = divide_by_r(psi);
  ScalarField2D odd_phi(psi.grid(), Parity::odd);
  for (int i = 1; i <= psi.Nr(); ++i)
    for (int k = 0; k < psi.Nz(); ++k) odd_phi(i, k) = phi(i, k);
  return multiply_by_r(lap_minus(odd_phi));
}

inline ScalarField2D solve_stream(const ScalarField2D& vorticity, double tol) {
  if (!(tol > 0)) throw Error("solve_stream: tol must be positive");
  ScalarField2D psi = multiply_by_r(stream_potential(vorticity));
  ScalarField2D residual = stream_operator(psi);
  const ScalarField2D source = multiply_by_r(vorticity);
  residual += source;
  residual.zero_wall();
  if (residual.max_abs() > tol * std::max(source.max_abs(), 1e-300) && source.max_abs() > 0)
    throw NumericalError("solve_stream: residual above tolerance");
  return psi;
}

// u = curl(phi e_theta) with phi = psi / r.
inline NoSwirlVec2 velocity_from_potential(const ScalarField2D& potential) { return curl_swirl(potential); }

inline NoSwirlVec2 velocity_from_stream(const ScalarField2D& psi) {
  ScalarField2D phi = divide_by_r(psi);
  ScalarField2D odd_phi(psi.grid(), Parity::odd);
  for (int i = 1; i <= psi.Nr(); ++i)
    for (int k = 0; k < psi.Nz(); ++k) odd_phi(i, k) = phi(i, k);
  return velocity_from_potential(odd_phi);
}

// Compact Laplacian with the axis handled by parity and Dirichlet data at r = R.
inline ScalarField2D poisson_operator(const ScalarField2D& phi) {
  require_parity(phi, Parity::even);
  const GridSpec& g = phi.grid();
  const double dr = g.dr();
  ScalarField2D out(g, Parity::even);
  for (int k = 0; k < g.Nz; ++k) out(0, k) = 4 * (phi(1, k) - phi(0, k)) / (dr * dr);
  for (int i = 1; i < g.Nr; ++i) {
    const double r = g.r(i), up = (r + 0.5 * dr) / (r * dr * dr), lo = (r - 0.5 * dr) / (r * dr * dr);
    for (int k = 0; k < g.Nz; ++k)
      out(i, k) = up * (phi(i + 1, k) - phi(i, k)) - lo * (phi(i, k) - phi(i - 1, k));
  }
  detail::add_dzz(phi, out);
  out.zero_wall();
  return out;
}

inline ScalarField2D poisson_axisym(const ScalarField2D& source, double tol) {
  require_parity(source, Parity::even);
  if (!(tol > 0)) throw Error("poisson_axisym: tol must be positive");
  const GridSpec& g = source.grid();
  const auto& ops = radial_operators(g);
  ScalarField2D phi = detail::solve_modes(
      source, Parity::even, 0, g.Nr - 1,
      [&](int m) { return ops.scalar_laplacian.scaled_shift(1.0, -axial_laplacian_symbol(g, m)); }, "poisson solve");
  ScalarField2D residual = poisson_operator(phi);
  ScalarField2D masked = source;
  masked.zero_wall();
  residual -= masked;
  if (residual.max_abs() > tol * std::max(1.0, masked.max_abs()))
    throw NumericalError("poisson_axisym: residual above tolerance");
  return phi;
}

// Potential phi (zero at the wall) with div(grad phi) = div f in the wide
// discrete sense; modes with vanishing axial symbol fix a gauge on the odd chain.
inline ScalarField2D projection_potential(const NoSwirlVec2& f) {
  const GridSpec& g = f.grid();
  const auto& ops = radial_operators(g);
  NoSwirlVec2 masked = f;
  masked.zero_wall();
  AxialSpectrum source = axial_forward(div_noswirl(masked));
  const int N = g.Nr, gauge_row = N - 1;
  std::vector<cplx> column(N);
  for (int m = 0; m < source.modes; ++m) {
    const double s = axial_derivative_symbol(g, m);
    PentaMatrix a = ops.grad_div.scaled_shift(1.0, -s * s);
    for (int i = 0; i < N; ++i) column[i] = source(i, m);
    if (std::abs(s) < 1e-9 / g.dz()) {
      a.pin(gauge_row);
      column[gauge_row] = 0;
    }
    PentaLU(std::move(a), "projection solve", m).solve_in_place(column);
    for (int i = 0; i <= N; ++i) source(i, m) = i < N ? column[i] : cplx{};
  }
  ScalarField2D phi = axial_inverse(std::move(source), g, Parity::even);
  phi.zero_wall();
  return phi;
}

// Exact orthogonal projection onto the kernel of div_noswirl (wall rows zero).
inline NoSwirlVec2 leray_project(const NoSwirlVec2& f, double tol) {
  NoSwirlVec2 out = f;
  out.zero_wall();
  NoSwirlVec2 grad = gradient(projection_potential(out));
  grad.zero_wall();
  out -= grad;
  out.zero_wall();
  const double scale = norm_l2(f);
  if (scale > 0) {
    ScalarField2D div = div_noswirl(out);
    div.zero_wall();
    if (norm_l2(div) > std::max(tol, 1e-10) * scale / f.grid().dr())
      throw NumericalError("leray_project: divergence above tolerance");
  }
  return out;
}

// (I - alpha * lap_minus) x = rhs, Dirichlet at the wall.
inline ScalarField2D viscous_solve(const ScalarField2D& rhs, double alpha) {
  const GridSpec& g = rhs.grid();
  const auto& ops = radial_operators(g);
  return detail::solve_modes(
      rhs, Parity::odd, 1, g.Nr - 1,
      [&](int m) { return ops.vector_laplacian.scaled_shift(-alpha, 1.0 + alpha * axial_laplacian_symbol(g, m)); },
      "viscous solve");
}

// curl_noswirl(curl_swirl(b)) with the wall row of the curl removed.
inline ScalarField2D curl_curl(const ScalarField2D& b) {
  NoSwirlVec2 j = curl_swirl(b);
  j.zero_wall();
  ScalarField2D out = curl_noswirl(j);
  out.zero_wall();
  return out;
}

// (I + tau * curl_curl) x = rhs, Dirichlet at the wall.
inline ScalarField2D curl_curl_solve(const ScalarField2D& rhs, double tau) {
  const GridSpec& g = rhs.grid();
  const auto& ops = radial_operators(g);
  return detail::solve_modes(rhs, Parity::odd, 1, g.Nr - 1,
                             [&](int m) {
                               const double s = axial_derivative_symbol(g, m);
                               return ops.curl_curl.scaled_shift(tau, 1.0 + tau * s * s);
                             },
                             "curl-curl solve");
}

// Upper bound on the square root of the curl-curl spectrum.
inline double curl_spectral_bound(const GridSpec& g) {
  return std::sqrt(radial_operators(g).curl_curl_bound + 1.0 / (g.dz() * g.dz()));
}

}  // namespace axinsm
