#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsm.hpp"
#include "spectral.hpp"

namespace axinsm {

// r * sum of Gaussians centred on the axis near z = pi.
struct GaussianSwirl {
  double amp[3], z0[3], width[3];

  GaussianSwirl(std::mt19937_64& rng, double w_lo, double w_hi) {
    std::uniform_real_distribution<double> a(-1, 1), z(pi - 0.8, pi + 0.8), w(w_lo, w_hi);
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

// Three-component field with Gaussian coefficients on |k_i| <= kmax.
inline CartesianField3D random_band_limited(int n, int kmax, std::mt19937_64& rng, double length = 2 * pi) {
  std::normal_distribution<double> g;
  Spectrum3D s{n, length, std::vector<std::vector<cplx>>(3, std::vector<cplx>(static_cast<std::size_t>(n) * n * n))};
  auto wrap = [n](int i) { return i <= n / 2 ? i : i - n; };
  for_each_mode(s, [&](std::size_t idx, int ix, int iy, int iz) {
    if (std::abs(wrap(ix)) > kmax || std::abs(wrap(iy)) > kmax || std::abs(wrap(iz)) > kmax) return;
    for (auto& c : s.comps) c[idx] = {g(rng), g(rng)};
  });
  return inverse(s);
}

struct LemmaReport {
  std::string suite;
  int samples = 0;
  double worst = 0;  // largest residual over the structured cases
  double tolerance = 0;
  std::optional<double> control;  // negative control, expected large
  double control_floor = 0;
  nlohmann::json details = nlohmann::json::object();

  LemmaReport(std::string name, int n, double tol) : suite(std::move(name)), samples(n), tolerance(tol) {}

  bool passed() const { return worst <= tolerance && (!control || *control >= control_floor); }

  nlohmann::json to_json() const {
    nlohmann::json j{{"suite", suite}, {"samples", samples}, {"worst", worst}, {"tolerance", tolerance}, {"passed", passed()}};
    if (control) {
      j["control"] = *control;
      j["control_floor"] = control_floor;
    }
    j["details"] = details;
    return j;
  }
};

// P(F x G) against its curl form for divergence-free F and swirl G.
inline LemmaReport colinearity_suite(int pairs, std::uint64_t seed, int n = 64) {
  std::mt19937_64 rng(seed);
  LemmaReport rep("colinearity", pairs, 1e-8);
  for (int t = 0; t < pairs; ++t) {
    GaussianSwirl a(rng, 0.5, 0.6), b(rng, 0.5, 0.6);
    const CartesianField3D f = curl3d(lift_swirl_profile(a, n, 2 * pi));
    const CartesianField3D g = lift_swirl_profile(b, n, 2 * pi);
    rep.worst = std::max(rep.worst, colinearity_identity_residual(f, g));
  }
  rep.control = colinearity_identity_residual(random_band_limited(32, 8, rng), random_band_limited(32, 8, rng));
  rep.control_floor = 1e-2;
  return rep;
}

// Paraproduct completeness for both products and partition of unity on every lattice mode.
inline LemmaReport bony_suite(int fields, std::uint64_t seed, int n = 32) {
  std::mt19937_64 rng(seed);
  LemmaReport rep("bony", fields, 1e-10);
  std::vector<CartesianField3D> fs;
  for (int t = 0; t < fields; ++t) fs.push_back(random_band_limited(n, n / 3 - 1, rng));
  double completeness = 0, partition = 0;
  for (int t = 0; t < fields; ++t) {
    const CartesianField3D& f = fs[t];
    const CartesianField3D& g = fs[(t + 1) % fields];
    completeness = std::max(completeness, bony_completeness_residual(f, g, ProductKind::cross));
    completeness = std::max(completeness, bony_completeness_residual(f, g, ProductKind::componentwise));
  }
  const Spectrum3D probe = forward(fs.front());
  for_each_mode(probe, [&](std::size_t, int ix, int iy, int iz) {
    const double k = frequency_magnitude(probe, ix, iy, iz);
    if (k == 0) return;
    double sum = 0;
    for (int j = -4; j <= 12; ++j) sum += dyadic_weight(j, k);
    partition = std::max(partition, std::abs(sum - 1));
  });
  rep.worst = std::max(completeness, partition);
  rep.details = {{"completeness", completeness}, {"partition_of_unity", partition}};
  return rep;
}

inline double hardy_ratio(const ScalarField2D& magnetic, double order, int lift_n) {
  const double b = sobolev_norm(lift(magnetic, lift_n), order + 1);
  if (b == 0) return 0.0;
  return sobolev_norm(lift_scalar(divide_by_r(magnetic), lift_n), order) / b;
}

// Sup over random swirl fields of |B/r|_{H^s} / |B|_{H^{s+1}} on two resolutions;
// the residual is the relative change of each supremum.
inline LemmaReport hardy_suite(int fields, std::uint64_t seed, int grid_n = 64, int lift_n = 32) {
  LemmaReport rep("hardy", fields, 0.1);
  for (double order : {0.0, 0.5}) {
    double sup[2] = {0, 0};
    for (int level = 0; level < 2; ++level) {
      std::mt19937_64 rng(seed);
      const int m = grid_n << level;
      const GridSpec g{m, m, pi, 2 * pi};
      for (int t = 0; t < fields; ++t) {
        const GaussianSwirl profile(rng, 0.3, 0.45);
        const ScalarField2D b = ScalarField2D::sample(g, Parity::odd, profile);
        sup[level] = std::max(sup[level], hardy_ratio(b, order, lift_n << level));
      }
    }
    const double change = std::abs(sup[1] - sup[0]) / sup[1];
    rep.worst = std::max(rep.worst, change);
    rep.details[order == 0 ? "s=0" : "s=0.5"] = {{"sup", sup[0]}, {"sup_refined", sup[1]}, {"change", change}};
  }
  return rep;
}

// Lifted velocity and electric field have no swirl; lifted B is pure swirl.
inline LemmaReport structure_suite(const NSMState& state, const Params& p) {
  LemmaReport rep("structure", 3, 1e-8);
  const NSMEvaluation ev = evaluate(state, p);
  const double du = structure_defect(lift(masked(ev.fields.velocity), p.lift_n), false);
  const double de = structure_defect(lift(masked(state.electric), p.lift_n), false);
  const double db = structure_defect(lift(state.magnetic, p.lift_n), true);
  rep.worst = std::max({du, de, db});
  rep.details = {{"velocity", du}, {"electric", de}, {"magnetic", db}};
  return rep;
}

// Radial Fourier multipliers map swirl fields to swirl fields.
inline LemmaReport swirl_suite(int fields, std::uint64_t seed, int n = 64) {
  std::mt19937_64 rng(seed);
  LemmaReport rep("swirl", fields, 1e-8);
  const std::vector<Multiplier> radial{
      [](double kx, double ky, double kz) { return std::exp(-0.05 * (kx * kx + ky * ky) - 0.03 * kz * kz); },
      [](double kx, double ky, double kz) { return std::exp(-0.04 * (kx * kx + ky * ky + kz * kz)); },
      [](double kx, double ky, double kz) {
        const double k2 = kx * kx + ky * ky;
        return k2 * std::exp(-0.05 * k2 - 0.05 * kz * kz);
      }};
  double control = 0;
  for (int t = 0; t < fields; ++t) {
    GaussianSwirl b(rng, 0.3, 0.4);
    const CartesianField3D g = lift_swirl_profile(b, n, 2 * pi);
    for (const auto& m : radial) rep.worst = std::max(rep.worst, swirl_preservation_check(g, m));
    if (t == 0)
      control = swirl_preservation_check(g, [](double kx, double ky, double) {
        const double k2 = kx * kx + ky * ky;
        return k2 == 0 ? 0.0 : (kx * kx - ky * ky) / k2;
      });
  }
  rep.control = control;
  rep.control_floor = 0.1;
  return rep;
}

}  // namespace axinsm
