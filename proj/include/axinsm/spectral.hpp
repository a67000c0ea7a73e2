#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "fft.hpp"

namespace axinsm {

// Samples on a periodic cube of side `length`: x, y in [-length/2, length/2),
// z in [0, length). One component for scalars, three for vectors.
struct CartesianField3D {
  int n = 0;
  double length = 0;
  std::vector<std::vector<double>> comps;

  CartesianField3D() = default;
  CartesianField3D(int n_, double length_, int components)
      : n(n_), length(length_), comps(components, std::vector<double>(static_cast<std::size_t>(n_) * n_ * n_, 0.0)) {
    if (n < 8 || (n & (n - 1)) != 0) throw Error("CartesianField3D: n must be a power of two >= 8");
  }

  int components() const { return static_cast<int>(comps.size()); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int ix, int iy, int iz) const { return (static_cast<std::size_t>(ix) * n + iy) * n + iz; }
  double dx() const { return length / n; }
  double x(int i) const { return -0.5 * length + i * dx(); }
  double z(int i) const { return i * dx(); }

  double max_abs() const {
    double m = 0;
    for (const auto& c : comps)
      for (double v : c) m = std::max(m, std::abs(v));
    return m;
  }
};

using Profile = std::function<double(double r, double z)>;

namespace detail {

inline double bilinear(const ScalarField2D& f, double rho, double z) {
  const GridSpec& g = f.grid();
  const double a = rho / g.dr();
  int i = static_cast<int>(a);
  if (i >= g.Nr) return 0.0;
  const double ta = a - i;
  double b = std::fmod(z, g.Lz) / g.dz();
  if (b < 0) b += g.Nz;
  int k = static_cast<int>(b);
  const double tb = b - k;
  k %= g.Nz;
  const int kp = (k + 1) % g.Nz;
  return (1 - ta) * ((1 - tb) * f(i, k) + tb * f(i, kp)) + ta * ((1 - tb) * f(i + 1, k) + tb * f(i + 1, kp));
}

inline constexpr double clip_tolerance = 1e-3;

inline void check_cube(const GridSpec& g, double length) {
  if (std::abs(length - g.Lz) > 1e-12 * g.Lz) throw Error("lift: cube side must equal the axial period");
}

// Largest |f| beyond r = length/2 - 2 cells, relative to max|f|.
inline double edge_fraction(const ScalarField2D& f, double length, int n) {
  const GridSpec& g = f.grid();
  const double limit = 0.5 * length - 2 * length / n;
  const double scale = f.max_abs();
  if (scale == 0) return 0.0;
  double edge = 0;
  for (int i = 0; i <= g.Nr; ++i) {
    if (g.r(i) <= limit) continue;
    for (int k = 0; k < g.Nz; ++k) edge = std::max(edge, std::abs(f(i, k)));
  }
  return edge / scale;
}

inline void check_clipping(const ScalarField2D& f, double length, int n) {
  if (edge_fraction(f, length, n) > clip_tolerance) throw Error("lift clipping: field support reaches the cube boundary");
}

template <class Fill>
CartesianField3D lift_with(int n, double length, int components, Fill&& fill) {
  CartesianField3D out(n, length, components);
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy) {
      const double x = out.x(ix), y = out.x(iy), rho = std::hypot(x, y);
      for (int iz = 0; iz < n; ++iz) fill(out, out.index(ix, iy, iz), x, y, rho, out.z(iz));
    }
  return out;
}

}  // namespace detail

// Pure-swirl field B e_theta from its lattice samples.
inline CartesianField3D lift(const ScalarField2D& swirl, int n, double length) {
  detail::check_cube(swirl.grid(), length);
  detail::check_clipping(swirl, length, n);
  return detail::lift_with(n, length, 3, [&](CartesianField3D& f, std::size_t idx, double x, double y, double rho, double z) {
    if (rho == 0) return;
    const double b = detail::bilinear(swirl, rho, z) / rho;
    f.comps[0][idx] = -b * y;
    f.comps[1][idx] = b * x;
  });
}

// Meridional field F_r e_r + F_z e_z from its lattice samples.
inline CartesianField3D lift(const NoSwirlVec2& v, int n, double length) {
  detail::check_cube(v.grid(), length);
  detail::check_clipping(v.radial, length, n);
  detail::check_clipping(v.axial, length, n);
  return detail::lift_with(n, length, 3, [&](CartesianField3D& f, std::size_t idx, double x, double y, double rho, double z) {
    if (rho > 0) {
      const double a = detail::bilinear(v.radial, rho, z) / rho;
      f.comps[0][idx] = a * x;
      f.comps[1][idx] = a * y;
    }
    f.comps[2][idx] = detail::bilinear(v.axial, rho, z);
  });
}

inline CartesianField3D lift(const ScalarField2D& swirl, int n) { return lift(swirl, n, swirl.grid().Lz); }
inline CartesianField3D lift(const NoSwirlVec2& v, int n) { return lift(v, n, v.grid().Lz); }

// Axisymmetric scalar (e.g. B_theta / r) as a one-component field.
inline CartesianField3D lift_scalar(const ScalarField2D& f, int n) {
  detail::check_cube(f.grid(), f.grid().Lz);
  detail::check_clipping(f, f.grid().Lz, n);
  return detail::lift_with(n, f.grid().Lz, 1, [&](CartesianField3D& out, std::size_t idx, double, double, double rho, double z) {
    out.comps[0][idx] = detail::bilinear(f, rho, z);
  });
}

// Direct sampling of analytic profiles.
inline CartesianField3D lift_swirl_profile(const Profile& b, int n, double length) {
  return detail::lift_with(n, length, 3, [&](CartesianField3D& f, std::size_t idx, double x, double y, double rho, double z) {
    if (rho == 0) return;
    const double a = b(rho, z) / rho;
    f.comps[0][idx] = -a * y;
    f.comps[1][idx] = a * x;
  });
}

inline CartesianField3D lift_noswirl_profile(const Profile& fr, const Profile& fz, int n, double length) {
  return detail::lift_with(n, length, 3, [&](CartesianField3D& f, std::size_t idx, double x, double y, double rho, double z) {
    if (rho > 0) {
      const double a = fr(rho, z) / rho;
      f.comps[0][idx] = a * x;
      f.comps[1][idx] = a * y;
    }
    f.comps[2][idx] = fz(rho, z);
  });
}

// ---------------------------------------------------------------- Fourier side

struct Spectrum3D {
  int n = 0;
  double length = 0;
  std::vector<std::vector<cplx>> comps;

  // Physical wavenumber of index i.
  double wavenumber(int i) const { return 2 * pi / length * (i <= n / 2 ? i : i - n); }
  // Wavenumber used by odd-order derivatives (Nyquist removed).
  double derivative_wavenumber(int i) const { return i == n / 2 ? 0.0 : wavenumber(i); }
  std::size_t index(int ix, int iy, int iz) const { return (static_cast<std::size_t>(ix) * n + iy) * n + iz; }
};

inline Spectrum3D forward(const CartesianField3D& f) {
  Spectrum3D s{f.n, f.length, {}};
  for (const auto& c : f.comps) s.comps.push_back(cube_forward(std::vector<cplx>(c.begin(), c.end()), f.n));
  return s;
}

inline CartesianField3D inverse(const Spectrum3D& s) {
  CartesianField3D f(s.n, s.length, static_cast<int>(s.comps.size()));
  for (std::size_t c = 0; c < s.comps.size(); ++c) {
    auto v = cube_inverse(s.comps[c], s.n);
    for (std::size_t i = 0; i < v.size(); ++i) f.comps[c][i] = v[i].real();
  }
  return f;
}

template <class Visit>
void for_each_mode(const Spectrum3D& s, Visit&& visit) {
  for (int ix = 0; ix < s.n; ++ix)
    for (int iy = 0; iy < s.n; ++iy)
      for (int iz = 0; iz < s.n; ++iz) visit(s.index(ix, iy, iz), ix, iy, iz);
}

// Continuum L^2 norm squared of the mode sum with coefficient weights w(idx).
template <class Weight>
double spectral_energy(const Spectrum3D& s, Weight&& w) {
  double sum = 0;
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    double e = 0;
    for (const auto& c : s.comps) e += std::norm(c[idx]);
    sum += w(idx, ix, iy, iz) * e;
  });
  const double nn = static_cast<double>(s.n) * s.n * s.n;
  return sum * s.length * s.length * s.length / (nn * nn);
}

inline double l2_norm(const CartesianField3D& f) {
  double sum = 0;
  for (const auto& c : f.comps)
    for (double v : c) sum += v * v;
  return std::sqrt(sum * std::pow(f.dx(), 3));
}

inline double frequency_magnitude(const Spectrum3D& s, int ix, int iy, int iz) {
  return std::sqrt(s.wavenumber(ix) * s.wavenumber(ix) + s.wavenumber(iy) * s.wavenumber(iy) +
                   s.wavenumber(iz) * s.wavenumber(iz));
}

// Homogeneous Sobolev norm with the sharp multiplier |xi|^s.
inline double sobolev_norm(const Spectrum3D& s, double order) {
  return std::sqrt(spectral_energy(s, [&](std::size_t, int ix, int iy, int iz) {
    const double k = frequency_magnitude(s, ix, iy, iz);
    if (k == 0) return order == 0 ? 1.0 : 0.0;
    return std::pow(k, 2 * order);
  }));
}

inline double sobolev_norm(const CartesianField3D& f, double order) { return sobolev_norm(forward(f), order); }

// ---------------------------------------------------------------- dyadic blocks

namespace detail {

inline constexpr double plateau = 0.2;

inline double smooth_step(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  const double a = std::exp(-1 / t), b = std::exp(-1 / (1 - t));
  return a / (a + b);
}

}  // namespace detail

// Bump of block j at frequency magnitude k: supported in 2^{j-1} < k < 2^{j+1},
// equal to 1 near k = 2^j, and summing to 1 over j for every k > 0.
inline double dyadic_weight(int j, double k) {
  if (k <= 0) return 0;
  const double y = std::abs(std::log2(k) - j);
  if (y <= detail::plateau) return 1;
  if (y >= 1 - detail::plateau) return 0;
  const double c = std::cos(0.5 * pi * detail::smooth_step((y - detail::plateau) / (1 - 2 * detail::plateau)));
  return c * c;
}

struct BlockSpectrum {
  int j_lo = 0;                 // lowest resolved block
  int j_hi = -1;                // highest resolved block
  std::vector<double> norms;    // ||Delta_j f||, j = j_lo..j_hi
  std::vector<double> overlaps; // <Delta_j f, Delta_{j+1} f>
  double low_tail = 0;          // norm of the unresolved part below 2^{j_lo}
  double high_tail = 0;         // norm of the blocks above j_hi
  double resolved = 0;          // norm of the sum of the resolved blocks
  double total = 0;             // ||f||
  std::optional<int> split_index;

  int count() const { return j_hi - j_lo + 1; }
  double block(int j) const { return (j < j_lo || j > j_hi) ? 0.0 : norms[j - j_lo]; }
};

// Resolved blocks have centres 2^j between the lowest and the Nyquist frequency.
inline std::pair<int, int> resolvable_range(int n, double length) {
  const double k_min = 2 * pi / length, k_nyq = pi * n / length;
  return {static_cast<int>(std::ceil(std::log2(k_min) - 1e-12)), static_cast<int>(std::floor(std::log2(k_nyq) + 1e-12))};
}

inline BlockSpectrum dyadic_blocks(const Spectrum3D& s, std::optional<double> sigma_c = std::nullopt) {
  const auto [j_lo, j_hi] = resolvable_range(s.n, s.length);
  const int count = j_hi - j_lo + 1;
  std::vector<double> e(count, 0.0), cross(std::max(0, count - 1), 0.0);
  double low = 0, high = 0, res = 0, tot = 0;
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    double a = 0;
    for (const auto& c : s.comps) a += std::norm(c[idx]);
    tot += a;
    if (a == 0) return;
    const double k = frequency_magnitude(s, ix, iy, iz);
    double sum = 0, prev = 0;
    for (int j = j_lo; j <= j_hi; ++j) {
      const double w = dyadic_weight(j, k);
      e[j - j_lo] += w * w * a;
      if (j > j_lo) cross[j - j_lo - 1] += prev * w * a;
      prev = w;
      sum += w;
    }
    res += sum * sum * a;
    if (k < std::exp2(j_lo)) {
      const double rest = 1 - sum;
      low += rest * rest * a;
    } else {
      const double rest = 1 - sum;
      high += rest * rest * a;
    }
  });
  const double nn = static_cast<double>(s.n) * s.n * s.n;
  const double scale = s.length * s.length * s.length / (nn * nn);
  BlockSpectrum b;
  b.j_lo = j_lo;
  b.j_hi = j_hi;
  for (double v : e) b.norms.push_back(std::sqrt(v * scale));
  for (double v : cross) b.overlaps.push_back(v * scale);
  b.low_tail = std::sqrt(low * scale);
  b.high_tail = std::sqrt(high * scale);
  b.resolved = std::sqrt(res * scale);
  b.total = std::sqrt(tot * scale);
  if (sigma_c) b.split_index = static_cast<int>(std::ceil(std::log2(*sigma_c) - 1e-12));
  return b;
}

inline BlockSpectrum dyadic_blocks(const CartesianField3D& f, std::optional<double> sigma_c = std::nullopt) {
  return dyadic_blocks(forward(f), sigma_c);
}

// Sum of squared block norms plus neighbour overlaps; equals resolved^2.
inline double partition_energy(const BlockSpectrum& b) {
  double sum = 0;
  for (double v : b.norms) sum += v * v;
  for (double v : b.overlaps) sum += 2 * v;
  return sum;
}

inline constexpr double max_besov_order = 4.0;

inline void check_order(const BlockSpectrum& b, double order) {
  if (!(order > -1.5) || order > max_besov_order)
    throw Error("besov: order " + std::to_string(order) + " outside the resolvable range (-3/2, 4] for blocks " +
                std::to_string(b.j_lo) + ".." + std::to_string(b.j_hi));
}

// Weighted l^q sum over blocks j_from..j_to (clipped to the resolved range).
inline double besov_sum(const BlockSpectrum& b, double order, double q, int j_from, int j_to) {
  check_order(b, order);
  if (!(q == 1 || q == 2 || std::isinf(q))) throw Error("besov: q must be 1, 2 or infinity");
  double acc = 0;
  for (int j = std::max(j_from, b.j_lo); j <= std::min(j_to, b.j_hi); ++j) {
    const double v = std::exp2(j * order) * b.block(j);
    if (q == 1) acc += v;
    else if (q == 2) acc += v * v;
    else acc = std::max(acc, v);
  }
  return q == 2 ? std::sqrt(acc) : acc;
}

inline double besov_norm(const BlockSpectrum& b, double order, double q) {
  return besov_sum(b, order, q, b.j_lo, b.j_hi);
}

// Blocks with 2^j < sigma c form the low part; the rest the high part.
struct FrequencySplit {
  BlockSpectrum low;
  BlockSpectrum high;
};

inline int split_index(double sigma_c) { return static_cast<int>(std::ceil(std::log2(sigma_c) - 1e-12)); }

inline FrequencySplit freq_split(const BlockSpectrum& b, double sigma_c) {
  const int jc = split_index(sigma_c);
  FrequencySplit out{b, b};
  auto restrict = [&](BlockSpectrum& part, bool keep_low) {
    part.split_index = jc;
    for (int j = b.j_lo; j <= b.j_hi; ++j) {
      const bool is_low = j < jc;
      if (is_low != keep_low) part.norms[j - b.j_lo] = 0;
    }
    for (int j = b.j_lo; j < b.j_hi; ++j)
      if ((j < jc) != keep_low || (j + 1 < jc) != keep_low) part.overlaps[j - b.j_lo] = 0;
  };
  restrict(out.low, true);
  restrict(out.high, false);
  return out;
}

struct TimedBlocks {
  double t;
  BlockSpectrum blocks;
};

// Time-Lebesgue norm of each block (trapezoid rule), then weighted l^q over blocks.
inline double chemin_lerner(const std::vector<TimedBlocks>& series, double r_time, double order, double q) {
  if (series.empty()) throw Error("chemin_lerner: empty series");
  if (series.size() < 2 && !std::isinf(r_time)) throw Error("chemin_lerner: need at least two samples");
  const BlockSpectrum& first = series.front().blocks;
  check_order(first, order);
  double acc = 0;
  for (int j = first.j_lo; j <= first.j_hi; ++j) {
    double tn = 0;
    if (std::isinf(r_time)) {
      for (const auto& s : series) tn = std::max(tn, s.blocks.block(j));
    } else {
      for (std::size_t n = 1; n < series.size(); ++n) {
        const double dt = series[n].t - series[n - 1].t;
        if (dt < 0) throw Error("chemin_lerner: times must be increasing");
        tn += 0.5 * dt * (std::pow(series[n].blocks.block(j), r_time) + std::pow(series[n - 1].blocks.block(j), r_time));
      }
      tn = std::pow(tn, 1 / r_time);
    }
    const double v = std::exp2(j * order) * tn;
    if (q == 1) acc += v;
    else if (q == 2) acc += v * v;
    else acc = std::max(acc, v);
  }
  return q == 2 ? std::sqrt(acc) : acc;
}

inline void write_block_csv(const BlockSpectrum& b, std::ostream& out) {
  out << "j,norm\n";
  char buf[64];
  for (int j = b.j_lo; j <= b.j_hi; ++j) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", j, b.block(j));
    out << buf;
  }
}

// ---------------------------------------------------------------- vector calculus

inline Spectrum3D leray3d(Spectrum3D s) {
  if (s.comps.size() != 3) throw Error("leray3d: vector field required");
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    const double k[3] = {s.derivative_wavenumber(ix), s.derivative_wavenumber(iy), s.derivative_wavenumber(iz)};
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0) return;
    const cplx dot = (k[0] * s.comps[0][idx] + k[1] * s.comps[1][idx] + k[2] * s.comps[2][idx]) / k2;
    for (int c = 0; c < 3; ++c) s.comps[c][idx] -= k[c] * dot;
  });
  return s;
}

inline CartesianField3D leray3d(const CartesianField3D& f) { return inverse(leray3d(forward(f))); }

inline Spectrum3D curl3d(const Spectrum3D& s) {
  if (s.comps.size() != 3) throw Error("curl3d: vector field required");
  Spectrum3D out = s;
  const cplx I(0, 1);
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    const double kx = s.derivative_wavenumber(ix), ky = s.derivative_wavenumber(iy), kz = s.derivative_wavenumber(iz);
    const cplx a = s.comps[0][idx], b = s.comps[1][idx], c = s.comps[2][idx];
    out.comps[0][idx] = I * (ky * c - kz * b);
    out.comps[1][idx] = I * (kz * a - kx * c);
    out.comps[2][idx] = I * (kx * b - ky * a);
  });
  return out;
}

inline CartesianField3D curl3d(const CartesianField3D& f) { return inverse(curl3d(forward(f))); }

inline Spectrum3D divergence3d(const Spectrum3D& s) {
  Spectrum3D out{s.n, s.length, {std::vector<cplx>(s.comps[0].size())}};
  const cplx I(0, 1);
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    out.comps[0][idx] = I * (s.derivative_wavenumber(ix) * s.comps[0][idx] + s.derivative_wavenumber(iy) * s.comps[1][idx] +
                             s.derivative_wavenumber(iz) * s.comps[2][idx]);
  });
  return out;
}

// d/dx_axis of every component.
inline Spectrum3D partial3d(Spectrum3D s, int axis) {
  const cplx I(0, 1);
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    const int i = axis == 0 ? ix : (axis == 1 ? iy : iz);
    for (auto& c : s.comps) c[idx] *= I * s.derivative_wavenumber(i);
  });
  return s;
}

// (-Delta)^{-1} with the derivative wavenumbers; zero where they vanish.
inline Spectrum3D inverse_laplacian(Spectrum3D s) {
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    const double kx = s.derivative_wavenumber(ix), ky = s.derivative_wavenumber(iy), kz = s.derivative_wavenumber(iz);
    const double k2 = kx * kx + ky * ky + kz * kz;
    for (auto& c : s.comps) c[idx] = k2 == 0 ? cplx{} : c[idx] / k2;
  });
  return s;
}

// ---------------------------------------------------------------- products

namespace detail {

inline bool outside_two_thirds(int n, int ix, int iy, int iz) {
  auto far = [n](int i) { return std::abs(i <= n / 2 ? i : i - n) > n / 3; };
  return far(ix) || far(iy) || far(iz);
}

}  // namespace detail

inline constexpr double headroom_tolerance = 1e-14;

// Fraction of spectral energy outside the 2/3 box.
inline double dealiasing_excess(const Spectrum3D& s) {
  double out = 0, all = 0;
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    double e = 0;
    for (const auto& c : s.comps) e += std::norm(c[idx]);
    all += e;
    if (detail::outside_two_thirds(s.n, ix, iy, iz)) out += e;
  });
  return all == 0 ? 0.0 : out / all;
}

inline void require_headroom(const CartesianField3D& f, const char* what) {
  if (dealiasing_excess(forward(f)) > headroom_tolerance) throw Error(std::string(what) + ": insufficient dealiasing headroom");
}

inline Spectrum3D dealias(Spectrum3D s) {
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    if (detail::outside_two_thirds(s.n, ix, iy, iz))
      for (auto& c : s.comps) c[idx] = 0;
  });
  return s;
}

inline CartesianField3D dealias(const CartesianField3D& f) { return inverse(dealias(forward(f))); }

enum class ProductKind { cross, componentwise };

inline CartesianField3D pointwise_product(const CartesianField3D& a, const CartesianField3D& b, ProductKind kind) {
  if (a.n != b.n || a.components() != 3 || b.components() != 3) throw Error("product: incompatible fields");
  CartesianField3D out(a.n, a.length, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double a0 = a.comps[0][i], a1 = a.comps[1][i], a2 = a.comps[2][i];
    const double b0 = b.comps[0][i], b1 = b.comps[1][i], b2 = b.comps[2][i];
    if (kind == ProductKind::cross) {
      out.comps[0][i] = a1 * b2 - a2 * b1;
      out.comps[1][i] = a2 * b0 - a0 * b2;
      out.comps[2][i] = a0 * b1 - a1 * b0;
    } else {
      out.comps[0][i] = a0 * b0;
      out.comps[1][i] = a1 * b1;
      out.comps[2][i] = a2 * b2;
    }
  }
  return out;
}

inline CartesianField3D& operator+=(CartesianField3D& a, const CartesianField3D& b) {
  for (std::size_t c = 0; c < a.comps.size(); ++c)
    for (std::size_t i = 0; i < a.size(); ++i) a.comps[c][i] += b.comps[c][i];
  return a;
}

inline CartesianField3D operator-(CartesianField3D a, const CartesianField3D& b) {
  for (std::size_t c = 0; c < a.comps.size(); ++c)
    for (std::size_t i = 0; i < a.size(); ++i) a.comps[c][i] -= b.comps[c][i];
  return a;
}

// Littlewood-Paley pieces of f over the full partition: the low-pass block
// (index j_lo - 1, holding the mean), the resolved blocks and every higher bump.
struct BlockFields {
  int first = 0;
  std::vector<CartesianField3D> pieces;
};

inline BlockFields block_fields(const CartesianField3D& f) {
  const Spectrum3D s = forward(f);
  const auto [j_lo, j_hi] = resolvable_range(f.n, f.length);
  const double k_max = std::sqrt(3.0) * pi * f.n / f.length;
  const int j_top = static_cast<int>(std::ceil(std::log2(k_max))) + 1;
  BlockFields out{j_lo - 1, {}};
  for (int j = j_lo - 1; j <= j_top; ++j) {
    Spectrum3D part = s;
    for_each_mode(part, [&](std::size_t idx, int ix, int iy, int iz) {
      const double k = frequency_magnitude(part, ix, iy, iz);
      double w;
      if (j == j_lo - 1) {
        w = 1;
        for (int i = j_lo; i <= j_top; ++i) w -= dyadic_weight(i, k);
      } else {
        w = dyadic_weight(j, k);
      }
      for (auto& c : part.comps) c[idx] *= w;
    });
    out.pieces.push_back(inverse(part));
  }
  return out;
}

struct Paraproducts {
  CartesianField3D low_high;   // T_F G: low frequencies of F against high of G
  CartesianField3D high_low;   // T_G F
  CartesianField3D remainder;  // |j - k| <= 2
};

inline Paraproducts bony_decompose(const CartesianField3D& f, const CartesianField3D& g,
                                   ProductKind kind = ProductKind::cross) {
  require_headroom(f, "bony_decompose");
  require_headroom(g, "bony_decompose");
  const BlockFields bf = block_fields(f), bg = block_fields(g);
  Paraproducts out{CartesianField3D(f.n, f.length, 3), CartesianField3D(f.n, f.length, 3),
                   CartesianField3D(f.n, f.length, 3)};
  const int count = static_cast<int>(bf.pieces.size());
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b) {
      const int j = bf.first + a, k = bg.first + b;
      CartesianField3D p = pointwise_product(bf.pieces[a], bg.pieces[b], kind);
      if (j - k < -2) out.low_high += p;
      else if (k - j < -2) out.high_low += p;
      else out.remainder += p;
    }
  out.low_high = dealias(out.low_high);
  out.high_low = dealias(out.high_low);
  out.remainder = dealias(out.remainder);
  return out;
}

// Relative L^2 gap between the three pieces and the dealiased product.
inline double bony_completeness_residual(const CartesianField3D& f, const CartesianField3D& g,
                                         ProductKind kind = ProductKind::cross) {
  Paraproducts p = bony_decompose(f, g, kind);
  CartesianField3D sum = p.low_high;
  sum += p.high_low;
  sum += p.remainder;
  const CartesianField3D ref = dealias(pointwise_product(f, g, kind));
  const double scale = l2_norm(ref);
  return scale == 0 ? l2_norm(sum) : l2_norm(sum - ref) / scale;
}

// Compares P(F x G) with (-Delta)^{-1} curl(-F x curl G - 2 (F.grad) G + F div G).
inline double colinearity_identity_residual(const CartesianField3D& f, const CartesianField3D& g) {
  const Spectrum3D fs = forward(f), gs = forward(g);
  if (dealiasing_excess(fs) > headroom_tolerance || dealiasing_excess(gs) > headroom_tolerance)
    throw Error("colinearity_identity_residual: dealiasing violation");

  Spectrum3D lhs = leray3d(dealias(forward(pointwise_product(f, g, ProductKind::cross))));
  for (auto& c : lhs.comps) c[0] = 0;  // (-Delta)^{-1} curl curl recovers P only away from xi = 0

  const CartesianField3D curl_g = inverse(curl3d(gs));
  const CartesianField3D div_g = inverse(divergence3d(gs));
  CartesianField3D term = pointwise_product(f, curl_g, ProductKind::cross);
  for (auto& c : term.comps)
    for (double& v : c) v = -v;
  for (int axis = 0; axis < 3; ++axis) {
    const CartesianField3D dg = inverse(partial3d(gs, axis));
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < f.size(); ++i) term.comps[c][i] -= 2 * f.comps[axis][i] * dg.comps[c][i];
  }
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < f.size(); ++i) term.comps[c][i] += f.comps[c][i] * div_g.comps[0][i];
  Spectrum3D rhs = inverse_laplacian(curl3d(dealias(forward(term))));

  Spectrum3D diff = lhs;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < diff.comps[c].size(); ++i) diff.comps[c][i] -= rhs.comps[c][i];
  auto unit = [](std::size_t, int, int, int) { return 1.0; };
  const double scale = std::max(std::sqrt(spectral_energy(lhs, unit)), std::sqrt(spectral_energy(rhs, unit)));
  return scale == 0 ? 0.0 : std::sqrt(spectral_energy(diff, unit)) / scale;
}

using Multiplier = std::function<double(double kx, double ky, double kz)>;

// Applies the multiplier and measures the largest e_r and e_z content relative
// to the largest field magnitude.
inline double swirl_preservation_check(const CartesianField3D& g, const Multiplier& m) {
  Spectrum3D s = forward(g);
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    const double w = m(s.wavenumber(ix), s.wavenumber(iy), s.wavenumber(iz));
    for (auto& c : s.comps) c[idx] *= w;
  });
  const CartesianField3D h = inverse(s);
  const double scale = g.max_abs();
  if (scale == 0) return 0.0;
  double worst = 0;
  for (int ix = 0; ix < g.n; ++ix)
    for (int iy = 0; iy < g.n; ++iy) {
      const double x = g.x(ix), y = g.x(iy), rho = std::hypot(x, y);
      for (int iz = 0; iz < g.n; ++iz) {
        const std::size_t i = g.index(ix, iy, iz);
        const double radial = rho > 0 ? (h.comps[0][i] * x + h.comps[1][i] * y) / rho
                                      : std::hypot(h.comps[0][i], h.comps[1][i]);
        worst = std::max(worst, std::abs(radial) + std::abs(h.comps[2][i]));
      }
    }
  return worst / scale;
}

// Largest azimuthal (for meridional fields) or meridional (for swirl fields)
// component relative to the field magnitude.
inline double structure_defect(const CartesianField3D& f, bool swirl) {
  const double scale = f.max_abs();
  if (scale == 0) return 0.0;
  double worst = 0;
  for (int ix = 0; ix < f.n; ++ix)
    for (int iy = 0; iy < f.n; ++iy) {
      const double x = f.x(ix), y = f.x(iy), rho = std::hypot(x, y);
      for (int iz = 0; iz < f.n; ++iz) {
        const std::size_t i = f.index(ix, iy, iz);
        const double fx = f.comps[0][i], fy = f.comps[1][i], fz = f.comps[2][i];
        double bad;
        if (swirl) bad = (rho > 0 ? std::abs(fx * x + fy * y) / rho : std::hypot(fx, fy)) + std::abs(fz);
        else bad = rho > 0 ? std::abs(-fx * y + fy * x) / rho : 0.0;
        worst = std::max(worst, bad);
      }
    }
  return worst / scale;
}

}  // namespace axinsm
