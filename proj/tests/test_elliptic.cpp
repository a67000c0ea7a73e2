#include <axinsm/elliptic.hpp>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace axinsm;
using axtest::grid;
using axtest::max_error;

namespace {

constexpr double R = pi;

double psi_exact(double r, double z) {
  const double w = 1 - r * r / (R * R);
  return r * r * w * w * std::sin(z);
}
double omega_exact(double r, double z) {
  const double w = 1 - r * r / (R * R);
  return -(-16 * r / (R * R) + 24 * r * r * r / (R * R * R * R) - r * w * w) * std::sin(z);
}

ScalarField2D random_odd(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ScalarField2D f(g, Parity::odd);
  for (int i = 1; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) f(i, k) = n(rng);
  return f;
}

NoSwirlVec2 random_noswirl(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  NoSwirlVec2 f(g);
  for (int i = 0; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) {
      if (i > 0) f.radial(i, k) = n(rng);
      f.axial(i, k) = n(rng);
    }
  return f;
}

}  // namespace

TEST(SolveStream, ZeroVorticity) {
  auto g = grid(16, 16);
  EXPECT_EQ(solve_stream(ScalarField2D(g, Parity::odd), 1e-10).max_abs(), 0.0);
}

TEST(SolveStream, ManufacturedSolutionSecondOrder) {
  double err[2];
  int n = 0;
  for (int N : {32, 64}) {
    auto g = grid(N, N);
    auto w = ScalarField2D::sample(g, Parity::odd, omega_exact);
    auto psi = solve_stream(w, 1e-10);
    EXPECT_EQ(psi.parity(), Parity::odd);
    err[n++] = max_error(psi, psi_exact, 0, 0);
  }
  EXPECT_LT(err[1], 1e-2);
  EXPECT_GT(err[0] / err[1], 3.6);
  EXPECT_LT(err[0] / err[1], 4.4);
}

TEST(SolveStream, Linearity) {
  auto g = grid(24, 16);
  auto a = random_odd(g, 1), b = random_odd(g, 2);
  auto combo = 2.0 * a - 0.5 * b;
  ScalarField2D expect = 2.0 * solve_stream(a, 1e-10) - 0.5 * solve_stream(b, 1e-10);
  auto got = solve_stream(combo, 1e-10);
  EXPECT_LT((got - expect).max_abs(), 1e-10 * expect.max_abs());
}

TEST(VelocityFromStream, ManufacturedAndDivergenceFree) {
  double err[2];
  int n = 0;
  for (int N : {32, 64}) {
    auto g = grid(N, N);
    auto psi = ScalarField2D::sample(g, Parity::odd, psi_exact);
    auto u = velocity_from_stream(psi);
    auto ur = [](double r, double z) {
      const double w = 1 - r * r / (R * R);
      return -r * w * w * std::cos(z);
    };
    auto uz = [](double r, double z) {
      return (2 - 8 * r * r / (R * R) + 6 * r * r * r * r / (R * R * R * R)) * std::sin(z);
    };
    err[n++] = std::max(max_error(u.radial, ur, 0, 1), max_error(u.axial, uz, 0, 1));
    auto d = div_noswirl(u);
    d.zero_wall();
    EXPECT_LT(d.max_abs(), 1e-10);
  }
  EXPECT_GT(err[0] / err[1], 3.6);
  EXPECT_LT(err[0] / err[1], 4.4);
  EXPECT_EQ(velocity_from_stream(ScalarField2D(grid(8, 8), Parity::odd)).radial.max_abs(), 0.0);
}

TEST(Poisson, ManufacturedSolutionSecondOrder) {
  auto phi_exact = [](double r, double z) {
    const double w = 1 - r * r / (R * R);
    return w * w * std::cos(z);
  };
  auto lap_exact = [&](double r, double z) {
    const double w = 1 - r * r / (R * R);
    return (-8 / (R * R) + 16 * r * r / (R * R * R * R) - w * w) * std::cos(z);
  };
  double err[2];
  int n = 0;
  for (int N : {32, 64}) {
    auto g = grid(N, N);
    auto src = ScalarField2D::sample(g, Parity::even, lap_exact);
    err[n++] = max_error(poisson_axisym(src, 1e-9), phi_exact, 0, 0);
  }
  EXPECT_GT(err[0] / err[1], 3.6);
  EXPECT_LT(err[0] / err[1], 4.4);
  EXPECT_EQ(poisson_axisym(ScalarField2D(grid(8, 8), Parity::even), 1e-9).max_abs(), 0.0);
}

TEST(Poisson, Linearity) {
  auto g = grid(16, 16);
  auto a = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r) * std::cos(z); });
  auto b = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-2 * r * r) * std::sin(2 * z); });
  auto lhs = poisson_axisym(3.0 * a + b, 1e-9);
  auto rhs = 3.0 * poisson_axisym(a, 1e-9) + poisson_axisym(b, 1e-9);
  EXPECT_LT((lhs - rhs).max_abs(), 1e-11);
}

TEST(Leray, AnnihilatesGradientsAndFixesSolenoidalFields) {
  auto g = grid(32, 32);
  auto phi = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-4 * r * r) * std::cos(z); });
  auto grad = gradient(phi);
  grad.zero_wall();
  EXPECT_LT(norm_l2(leray_project(grad, 1e-10)), 1e-12 * norm_l2(grad));

  auto u = velocity_from_stream(ScalarField2D::sample(g, Parity::odd, psi_exact));
  u.zero_wall();
  EXPECT_LT(norm_l2(leray_project(u, 1e-10) - u), 1e-12 * norm_l2(u));
}

TEST(Leray, ExactProjectorProperties) {
  auto g = grid(24, 16);
  auto f = random_noswirl(g, 5), h = random_noswirl(g, 6);
  auto pf = leray_project(f, 1e-10), ph = leray_project(h, 1e-10);
  auto div = div_noswirl(pf);
  div.zero_wall();
  EXPECT_LT(div.max_abs(), 1e-9 * f.radial.max_abs() / g.dr());
  EXPECT_LT(norm_l2(leray_project(pf, 1e-10) - pf), 1e-11 * norm_l2(pf));
  EXPECT_NEAR(inner(pf, h), inner(f, ph), 1e-10 * norm_l2(f) * norm_l2(h));
  auto lin = leray_project(2.0 * f + h, 1e-10) - (2.0 * pf + ph);
  EXPECT_LT(norm_l2(lin), 1e-11 * norm_l2(f));
}

TEST(ImplicitSolves, MatchExplicitOperators) {
  auto g = grid(24, 16);
  auto x = random_odd(g, 9);
  auto lhs = x - 0.3 * lap_minus(x);
  lhs.zero_wall();
  EXPECT_LT((viscous_solve(lhs, 0.3) - x).max_abs(), 1e-10 * x.max_abs());
  auto rhs = x + 0.7 * curl_curl(x);
  EXPECT_LT((curl_curl_solve(rhs, 0.7) - x).max_abs(), 1e-10 * x.max_abs());
  auto pot = stream_potential(lap_minus(x));
  EXPECT_LT((pot + x).max_abs(), 1e-10 * x.max_abs());
}

TEST(ImplicitSolves, CurlCurlIsPositive) {
  auto g = grid(24, 16);
  auto x = random_odd(g, 3);
  NoSwirlVec2 j = curl_swirl(x);
  j.zero_wall();
  EXPECT_NEAR(inner(x, curl_curl(x)), inner(j, j), 1e-10 * inner(j, j));
  EXPECT_GT(curl_spectral_bound(g), 0.0);
}
