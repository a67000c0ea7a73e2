#pragma once

#include <cmath>
#include <vector>

#include "core.hpp"

namespace axinsm {

namespace detail {

inline int wrap(int k, int n) { return k < 0 ? k + n : (k >= n ? k - n : k); }

// Second-order axial second difference.
inline void add_dzz(const ScalarField2D& f, ScalarField2D& out) {
  const int N = f.Nr(), Nz = f.Nz();
  const double s = 1.0 / (f.grid().dz() * f.grid().dz());
  for (int i = 0; i <= N; ++i) {
    const double* a = f.row(i);
    double* o = out.row(i);
    for (int k = 0; k < Nz; ++k) o[k] += s * (a[wrap(k + 1, Nz)] - 2 * a[k] + a[wrap(k - 1, Nz)]);
  }
}

}  // namespace detail

// Quadrature weight of lattice row i for the cylindrical measure r dr.
// The axis weight dr^2/4 makes the discrete curls exact adjoints.
inline std::vector<double> radial_weights(const GridSpec& g) {
  std::vector<double> w(g.Nr + 1);
  const double dr = g.dr();
  w[0] = dr * dr / 4;
  for (int i = 1; i < g.Nr; ++i) w[i] = g.r(i) * dr;
  w[g.Nr] = 0;
  return w;
}

// Weighted inner product approximating the R^3 integral over the cylinder.
inline double inner(const ScalarField2D& f, const ScalarField2D& g) {
  const auto w = radial_weights(f.grid());
  double sum = 0;
  for (int i = 0; i < f.Nr(); ++i) {
    const double* a = f.row(i);
    const double* b = g.row(i);
    double row = 0;
    for (int k = 0; k < f.Nz(); ++k) row += a[k] * b[k];
    sum += w[i] * row;
  }
  return 2 * pi * f.grid().dz() * sum;
}

inline double inner(const NoSwirlVec2& a, const NoSwirlVec2& b) {
  return inner(a.radial, b.radial) + inner(a.axial, b.axial);
}

inline double norm_l2(const ScalarField2D& f) { return std::sqrt(std::max(0.0, inner(f, f))); }
inline double norm_l2(const NoSwirlVec2& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline double norm_lp(const ScalarField2D& f, double p) {
  const auto w = radial_weights(f.grid());
  double sum = 0;
  for (int i = 0; i < f.Nr(); ++i)
    for (int k = 0; k < f.Nz(); ++k) sum += w[i] * std::pow(std::abs(f(i, k)), p);
  return std::pow(2 * pi * f.grid().dz() * sum, 1.0 / p);
}

inline ScalarField2D ddr(const ScalarField2D& f) {
  const GridSpec& g = f.grid();
  const int N = g.Nr, Nz = g.Nz;
  const double dr = g.dr();
  ScalarField2D out(g, flipped(f.parity()));
  if (f.parity() == Parity::odd)
    for (int k = 0; k < Nz; ++k) out(0, k) = f(1, k) / dr;
  for (int i = 1; i < N; ++i)
    for (int k = 0; k < Nz; ++k) out(i, k) = (f(i + 1, k) - f(i - 1, k)) / (2 * dr);
  for (int k = 0; k < Nz; ++k) out(N, k) = (3 * f(N, k) - 4 * f(N - 1, k) + f(N - 2, k)) / (2 * dr);
  return out;
}

inline ScalarField2D ddz(const ScalarField2D& f) {
  const int Nz = f.Nz();
  const double h = 1.0 / (2 * f.grid().dz());
  ScalarField2D out(f.grid(), f.parity());
  for (int i = 0; i <= f.Nr(); ++i) {
    const double* a = f.row(i);
    double* o = out.row(i);
    for (int k = 0; k < Nz; ++k) o[k] = h * (a[detail::wrap(k + 1, Nz)] - a[detail::wrap(k - 1, Nz)]);
  }
  out.enforce_parity();
  return out;
}

inline ScalarField2D dzz(const ScalarField2D& f) {
  ScalarField2D out(f.grid(), f.parity());
  detail::add_dzz(f, out);
  out.enforce_parity();
  return out;
}

// (1/r) d/dr (r f) for odd f; conservative centred form, axis value 2 f_1/dr.
inline ScalarField2D radial_divergence(const ScalarField2D& f) {
  require_parity(f, Parity::odd);
  const GridSpec& g = f.grid();
  const int N = g.Nr, Nz = g.Nz;
  const double dr = g.dr();
  ScalarField2D out(g, Parity::even);
  for (int k = 0; k < Nz; ++k) out(0, k) = 2 * f(1, k) / dr;
  for (int i = 1; i < N; ++i) {
    const double rp = g.r(i + 1), rm = g.r(i - 1), s = 1.0 / (2 * dr * g.r(i));
    for (int k = 0; k < Nz; ++k) out(i, k) = s * (rp * f(i + 1, k) - rm * f(i - 1, k));
  }
  const double R = g.r(N);
  for (int k = 0; k < Nz; ++k)
    out(N, k) = (3 * R * f(N, k) - 4 * g.r(N - 1) * f(N - 1, k) + g.r(N - 2) * f(N - 2, k)) / (2 * dr * R);
  return out;
}

inline ScalarField2D divide_by_r(const ScalarField2D& f) {
  require_parity(f, Parity::odd, "Hardy division requires vanishing trace");
  const GridSpec& g = f.grid();
  ScalarField2D out(g, Parity::even);
  const double dr = g.dr();
  for (int k = 0; k < g.Nz; ++k) out(0, k) = (4 * f(1, k) - f(2, k)) / (2 * dr);
  for (int i = 1; i <= g.Nr; ++i) {
    const double inv = 1.0 / g.r(i);
    for (int k = 0; k < g.Nz; ++k) out(i, k) = f(i, k) * inv;
  }
  return out;
}

// d_rr + (1/r) d_r + d_zz - 1/r^2 on odd fields, written as d_r((1/r) d_r(r f)).
inline ScalarField2D lap_minus(const ScalarField2D& f) {
  require_parity(f, Parity::odd);
  const GridSpec& g = f.grid();
  const int N = g.Nr, Nz = g.Nz;
  const double dr = g.dr(), R = g.R;
  ScalarField2D out(g, Parity::odd);
  for (int i = 1; i < N; ++i) {
    const double ri = g.r(i), up = g.r(i + 1) / ((ri + 0.5 * dr) * dr * dr),
                 mid = ri * (1.0 / (ri + 0.5 * dr) + 1.0 / (ri - 0.5 * dr)) / (dr * dr),
                 lo = g.r(i - 1) / ((ri - 0.5 * dr) * dr * dr);
    for (int k = 0; k < Nz; ++k) out(i, k) = up * f(i + 1, k) - mid * f(i, k) + lo * f(i - 1, k);
  }
  for (int k = 0; k < Nz; ++k) {
    const double frr = (2 * f(N, k) - 5 * f(N - 1, k) + 4 * f(N - 2, k) - f(N - 3, k)) / (dr * dr);
    const double fr = (3 * f(N, k) - 4 * f(N - 1, k) + f(N - 2, k)) / (2 * dr);
    out(N, k) = frr + fr / R - f(N, k) / (R * R);
  }
  detail::add_dzz(f, out);
  out.enforce_parity();
  return out;
}

// d_rr + (3/r) d_r + d_zz on even fields; axis limit 4 d_rr + d_zz.
inline ScalarField2D lap_plus(const ScalarField2D& f) {
  require_parity(f, Parity::even);
  const GridSpec& g = f.grid();
  const int N = g.Nr, Nz = g.Nz;
  const double dr = g.dr(), R = g.R, h2 = 1.0 / (dr * dr);
  ScalarField2D out(g, Parity::even);
  for (int k = 0; k < Nz; ++k) out(0, k) = 8 * (f(1, k) - f(0, k)) * h2;
  for (int i = 1; i < N; ++i) {
    const double c = 3.0 / (g.r(i) * 2 * dr);
    for (int k = 0; k < Nz; ++k)
      out(i, k) = (f(i + 1, k) - 2 * f(i, k) + f(i - 1, k)) * h2 + c * (f(i + 1, k) - f(i - 1, k));
  }
  for (int k = 0; k < Nz; ++k) {
    const double frr = (2 * f(N, k) - 5 * f(N - 1, k) + 4 * f(N - 2, k) - f(N - 3, k)) * h2;
    const double fr = (3 * f(N, k) - 4 * f(N - 1, k) + f(N - 2, k)) / (2 * dr);
    out(N, k) = frr + 3 * fr / R;
  }
  detail::add_dzz(f, out);
  return out;
}

// curl(B e_theta) = -d_z B e_r + (1/r) d_r(r B) e_z.
inline NoSwirlVec2 curl_swirl(const ScalarField2D& b) {
  require_parity(b, Parity::odd);
  ScalarField2D radial = ddz(b);
  radial *= -1.0;
  return {std::move(radial), radial_divergence(b)};
}

// e_theta component of curl(E_r e_r + E_z e_z).
inline ScalarField2D curl_noswirl(const NoSwirlVec2& e) {
  require_parity(e.radial, Parity::odd);
  require_parity(e.axial, Parity::even);
  ScalarField2D out = ddz(e.radial);
  out -= ddr(e.axial);
  out.enforce_parity();
  return out;
}

inline ScalarField2D div_noswirl(const NoSwirlVec2& f) {
  require_parity(f.radial, Parity::odd);
  require_parity(f.axial, Parity::even);
  ScalarField2D out = radial_divergence(f.radial);
  out += ddz(f.axial);
  return out;
}

inline NoSwirlVec2 gradient(const ScalarField2D& phi) {
  require_parity(phi, Parity::even);
  return {ddr(phi), ddz(phi)};
}

inline ScalarField2D multiply(const ScalarField2D& a, const ScalarField2D& b) {
  const Parity p = a.parity() == b.parity() ? Parity::even : Parity::odd;
  ScalarField2D out(a.grid(), p);
  auto x = a.values(), y = b.values();
  auto o = out.values();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] = x[n] * y[n];
  out.enforce_parity();
  return out;
}

// F x (B e_theta) = -F_z B e_r + F_r B e_z.
inline NoSwirlVec2 cross_with_swirl(const NoSwirlVec2& f, const ScalarField2D& b) {
  ScalarField2D radial = multiply(f.axial, b);
  radial *= -1.0;
  return {std::move(radial), multiply(f.radial, b)};
}

// Arakawa form of a_r b_z - a_z b_r; zero on the axis and wall rows.
inline ScalarField2D arakawa_jacobian(const ScalarField2D& a, const ScalarField2D& b) {
  const GridSpec& g = a.grid();
  const int N = g.Nr, Nz = g.Nz;
  ScalarField2D out(g, Parity::odd);
  const double s = 1.0 / (12 * g.dr() * g.dz());
  for (int i = 1; i < N; ++i) {
    for (int k = 0; k < Nz; ++k) {
      const int kp = detail::wrap(k + 1, Nz), km = detail::wrap(k - 1, Nz);
      const double a_e = a(i + 1, k), a_w = a(i - 1, k), a_n = a(i, kp), a_s = a(i, km);
      const double b_e = b(i + 1, k), b_w = b(i - 1, k), b_n = b(i, kp), b_s = b(i, km);
      const double jpp = (a_e - a_w) * (b_n - b_s) - (a_n - a_s) * (b_e - b_w);
      const double jpx = a_e * (b(i + 1, kp) - b(i + 1, km)) - a_w * (b(i - 1, kp) - b(i - 1, km)) -
                         a_n * (b(i + 1, kp) - b(i - 1, kp)) + a_s * (b(i + 1, km) - b(i - 1, km));
      const double jxp = b_n * (a(i + 1, kp) - a(i - 1, kp)) - b_s * (a(i + 1, km) - a(i - 1, km)) -
                         b_e * (a(i + 1, kp) - a(i + 1, km)) + b_w * (a(i - 1, kp) - a(i - 1, km));
      out(i, k) = s * (jpp + jpx + jxp);
    }
  }
  return out;
}

}  // namespace axinsm
