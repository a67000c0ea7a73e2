#pragma once

#include <axinsm/core.hpp>

#include <cmath>
#include <functional>
#include <random>

namespace axtest {

using axinsm::GridSpec;
using axinsm::ScalarField2D;

inline GridSpec grid(int nr, int nz) { return GridSpec{nr, nz, axinsm::pi, 2 * axinsm::pi}; }

// Max |f - exact| over rows lo..Nr-hi_skip.
inline double max_error(const ScalarField2D& f, const std::function<double(double, double)>& exact, int lo = 1,
                        int hi_skip = 1) {
  const auto& g = f.grid();
  double m = 0;
  for (int i = lo; i <= g.Nr - hi_skip; ++i)
    for (int k = 0; k < g.Nz; ++k) m = std::max(m, std::abs(f(i, k) - exact(g.r(i), g.z(k))));
  return m;
}

// Smooth odd profile r * sum of Gaussians centred on the axis, support well inside r < R/2.
struct RandomSwirl {
  double amp[3], z0[3], width[3];
  explicit RandomSwirl(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(-1, 1), z(axinsm::pi - 1, axinsm::pi + 1), w(0.3, 0.45);
    for (int n = 0; n < 3; ++n) {
      amp[n] = a(rng);
      z0[n] = z(rng);
      width[n] = w(rng);
    }
  }
  double operator()(double r, double zz) const {
    double s = 0;
    for (int n = 0; n < 3; ++n) s += amp[n] * std::exp(-(r * r + (zz - z0[n]) * (zz - z0[n])) / (width[n] * width[n]));
    return r * s;
  }
};

}  // namespace axtest

#include <axinsm/calculus.hpp>

namespace axtest {

// Swirling bump: stream potential and magnetic field a * r * exp(-(r^2 + (z - pi)^2) / w^2).
inline axinsm::NSMState bump_state(const GridSpec& g, double a, double w, double b_scale = 1.0) {
  using namespace axinsm;
  auto profile = [=](double r, double z) { return a * r * std::exp(-(r * r + (z - pi) * (z - pi)) / (w * w)); };
  NSMState s(g);
  s.vorticity = -1.0 * lap_minus(ScalarField2D::sample(g, Parity::odd, profile));
  s.vorticity.zero_wall();
  s.magnetic = b_scale * ScalarField2D::sample(g, Parity::odd, profile);
  return s;
}

}  // namespace axtest
