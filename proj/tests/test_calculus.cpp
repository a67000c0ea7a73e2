#include <axinsm/calculus.hpp>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace axinsm;
using axtest::grid;
using axtest::max_error;

namespace {

double ratio(const std::function<double(const GridSpec&)>& error_on) {
  return error_on(grid(32, 32)) / error_on(grid(64, 64));
}

}  // namespace

TEST(Ddr, QuadraticIsExactInInterior) {
  auto g = grid(16, 16);
  auto f = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return r * r * z; });
  auto d = ddr(f);
  EXPECT_EQ(d.parity(), Parity::odd);
  EXPECT_LT(max_error(d, [](double r, double z) { return 2 * r * z; }, 0, 0), 1e-12);
}

TEST(Ddr, ConstantGivesZero) {
  auto f = ScalarField2D::sample(grid(16, 16), Parity::even, [](double, double) { return 3.0; });
  EXPECT_EQ(ddr(f).max_abs(), 0.0);
}

TEST(Ddr, SecondOrderOnSmoothOddField) {
  const double q = ratio([](const GridSpec& g) {
    auto f = ScalarField2D::sample(g, Parity::odd, [&](double r, double z) { return r * std::exp(-r * r) * std::sin(z); });
    return max_error(ddr(f), [](double r, double z) { return (1 - 2 * r * r) * std::exp(-r * r) * std::sin(z); }, 0, 0);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(Ddz, SineAndRefinement) {
  auto g = grid(8, 64);
  auto f = ScalarField2D::sample(g, Parity::even, [](double, double z) { return std::sin(z); });
  EXPECT_LT(max_error(ddz(f), [](double, double z) { return std::cos(z); }, 0, 0), 2e-3);
  auto flat = ScalarField2D::sample(g, Parity::even, [](double r, double) { return r * r; });
  EXPECT_EQ(ddz(flat).max_abs(), 0.0);
  const double q = ratio([](const GridSpec& gg) {
    auto h = ScalarField2D::sample(gg, Parity::even, [](double, double z) { return std::sin(2 * z); });
    return max_error(ddz(h), [](double, double z) { return 2 * std::cos(2 * z); }, 0, 0);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(LapMinus, ExactOnLinearAndCubic) {
  auto g = grid(16, 16);
  auto lin = ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r; });
  EXPECT_LT(max_error(lap_minus(lin), [](double, double) { return 0.0; }), 1e-11);
  auto cub = ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r * r * r; });
  EXPECT_LT(max_error(lap_minus(cub), [](double r, double) { return 8 * r; }), 1e-10);
}

TEST(LapMinus, SecondOrderOnBump) {
  const double q = ratio([](const GridSpec& g) {
    auto f = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return r * std::exp(-r * r - std::cos(z)); });
    auto exact = [](double r, double z) {
      const double e = std::exp(-r * r - std::cos(z));
      // (d_rr + d_r/r - 1/r^2)(r e) + d_zz(r e)
      const double radial = (4 * r * r * r - 8 * r) * e;
      const double axial = r * (std::sin(z) * std::sin(z) + std::cos(z)) * e;
      return radial + axial;
    };
    return max_error(lap_minus(f), exact, 1, 1);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(LapMinus, RejectsEvenInput) {
  ScalarField2D f(grid(8, 8), Parity::even);
  EXPECT_THROW(lap_minus(f), Error);
}

TEST(LapPlus, QuadraticAndConstant) {
  auto g = grid(16, 16);
  auto f = ScalarField2D::sample(g, Parity::even, [](double r, double) { return r * r; });
  EXPECT_LT(max_error(lap_plus(f), [](double, double) { return 8.0; }, 0, 0), 1e-10);
  auto c = ScalarField2D::sample(g, Parity::even, [](double, double) { return 2.0; });
  EXPECT_LT(lap_plus(c).max_abs(), 1e-12);
  EXPECT_THROW(lap_plus(ScalarField2D(g, Parity::odd)), Error);
}

TEST(LapPlus, SecondOrderOnBump) {
  const double q = ratio([](const GridSpec& g) {
    auto f = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r) * std::sin(z); });
    auto exact = [](double r, double z) { return (4 * r * r - 8 - 1) * std::exp(-r * r) * std::sin(z); };
    return max_error(lap_plus(f), exact, 0, 1);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(CurlSwirl, ExactCases) {
  auto g = grid(16, 16);
  auto b = ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r; });
  auto j = curl_swirl(b);
  EXPECT_EQ(j.radial.max_abs(), 0.0);
  EXPECT_LT(max_error(j.axial, [](double, double) { return 2.0; }, 0, 0), 1e-12);

  auto b2 = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return r * std::sin(z); });
  auto j2 = curl_swirl(b2);
  // centred d_z of sin is exact up to the factor sin(dz)/dz
  const double f = std::sin(g.dz()) / g.dz();
  EXPECT_LT(max_error(j2.radial, [&](double r, double z) { return -f * r * std::cos(z); }, 0, 0), 1e-12);
  EXPECT_LT(max_error(j2.axial, [](double, double z) { return 2 * std::sin(z); }, 0, 0), 1e-12);
}

TEST(CurlSwirl, SecondOrderOnGaussian) {
  const double q = ratio([](const GridSpec& g) {
    auto b = ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r * std::exp(-r * r); });
    return max_error(curl_swirl(b).axial, [](double r, double) { return 2 * std::exp(-r * r) * (1 - r * r); }, 0, 1);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(CurlNoswirl, GradientAndAnalytic) {
  auto g = grid(32, 32);
  auto phi = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r) * std::cos(z); });
  auto grad = gradient(phi);
  // centred differences commute, so the curl of a discrete gradient vanishes to round-off
  EXPECT_LT(max_error(curl_noswirl(grad), [](double, double) { return 0.0; }), 1e-12);

  NoSwirlVec2 e(ScalarField2D(g, Parity::odd), ScalarField2D::sample(g, Parity::even, [](double r, double) { return r * r; }));
  EXPECT_LT(max_error(curl_noswirl(e), [](double r, double) { return -2 * r; }, 0, 0), 1e-11);
}

TEST(CurlNoswirl, SecondOrderOnSmoothField) {
  const double q = ratio([](const GridSpec& g) {
    NoSwirlVec2 e(ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return r * std::exp(-r * r) * std::sin(z); }),
                  ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r) * std::cos(2 * z); }));
    auto exact = [](double r, double z) {
      return r * std::exp(-r * r) * std::cos(z) + 2 * r * std::exp(-r * r) * std::cos(2 * z);
    };
    return max_error(curl_noswirl(e), exact, 1, 1);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(DivideByR, LimitsAtTheAxis) {
  auto g = grid(32, 16);
  auto f = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return r * r * z; });
  auto q = divide_by_r(f);
  EXPECT_EQ(q.parity(), Parity::even);
  EXPECT_LT(max_error(q, [](double r, double z) { return r * z; }, 0, 0), 1e-12);

  auto s = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return std::sin(r) * z; });
  auto qs = divide_by_r(s);
  for (int k = 0; k < g.Nz; ++k) EXPECT_NEAR(qs(0, k), g.z(k), 2 * g.dr() * g.dr() * g.z(k) + 1e-14);

  auto lin = ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r; });
  EXPECT_LT(max_error(divide_by_r(lin), [](double, double) { return 1.0; }, 0, 0), 1e-13);
  EXPECT_THROW(divide_by_r(ScalarField2D(g, Parity::even)), Error);
}

TEST(DivNoswirl, ExactCases) {
  auto g = grid(16, 16);
  NoSwirlVec2 f(ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r; }),
                ScalarField2D::sample(g, Parity::even, [](double, double z) { return -2 * std::sin(z); }));
  auto d = div_noswirl(f);
  const double fac = std::sin(g.dz()) / g.dz();
  EXPECT_LT(max_error(d, [&](double, double z) { return 2 - 2 * fac * std::cos(z); }, 0, 0), 1e-12);

  NoSwirlVec2 cubic(ScalarField2D::sample(g, Parity::odd, [](double r, double) { return r * r * r; }), ScalarField2D(g, Parity::even));
  const double h2 = g.dr() * g.dr();
  EXPECT_LT(max_error(div_noswirl(cubic), [&](double r, double) { return 4 * r * r + 4 * h2 * (r > 0 ? 1 : 0); }, 1, 1), 1e-10);
}

TEST(Parity, OddOutputsVanishOnAxis) {
  auto g = grid(16, 16);
  auto e = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::cos(r) + z; });
  auto o = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return std::sin(r) * (1 + z); });
  for (const auto& f : {ddr(e), lap_minus(o), ddz(o), curl_swirl(o).radial, curl_noswirl(gradient(e))}) {
    ASSERT_EQ(f.parity(), Parity::odd);
    for (int k = 0; k < g.Nz; ++k) EXPECT_EQ(f(0, k), 0.0);
  }
}

TEST(Adjointness, CurlsAreWeightedAdjoints) {
  auto g = grid(24, 16);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  ScalarField2D b(g, Parity::odd);
  NoSwirlVec2 e(g);
  for (int i = 1; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) {
      b(i, k) = n(rng);
      e.radial(i, k) = n(rng);
    }
  for (int i = 0; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) e.axial(i, k) = n(rng);
  NoSwirlVec2 cb = curl_swirl(b);
  cb.zero_wall();
  const double lhs = inner(curl_noswirl(e), b), rhs = inner(e, cb);
  EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs));

  ScalarField2D phi(g, Parity::even);
  for (int i = 0; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) phi(i, k) = n(rng);
  NoSwirlVec2 gp = gradient(phi);
  gp.zero_wall();
  EXPECT_NEAR(inner(gp, e), -inner(phi, div_noswirl(e)), 1e-10 * std::abs(inner(gp, e)));
}

TEST(Arakawa, ConservesTheStreamWeightedSum) {
  auto g = grid(24, 16);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  ScalarField2D psi(g, Parity::odd), q(g, Parity::even);
  for (int i = 0; i <= g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) {
      if (i > 0 && i < g.Nr) psi(i, k) = n(rng);
      q(i, k) = n(rng);
    }
  auto j = arakawa_jacobian(psi, q);
  double sum = 0, scale = 0;
  for (int i = 1; i < g.Nr; ++i)
    for (int k = 0; k < g.Nz; ++k) {
      sum += psi(i, k) * j(i, k);
      scale += std::abs(psi(i, k) * j(i, k));
    }
  EXPECT_LT(std::abs(sum), 1e-12 * scale);
}

TEST(Arakawa, ApproximatesTheJacobian) {
  const double q = ratio([](const GridSpec& g) {
    auto a = ScalarField2D::sample(g, Parity::odd, [](double r, double z) { return r * r * std::exp(-r * r) * std::sin(z); });
    auto b = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r) * std::cos(z); });
    auto exact = [](double r, double z) {
      const double e = std::exp(-r * r);
      const double ar = (2 * r - 2 * r * r * r) * e * std::sin(z), az = r * r * e * std::cos(z);
      const double br = -2 * r * e * std::cos(z), bz = -e * std::sin(z);
      return ar * bz - az * br;
    };
    return max_error(arakawa_jacobian(a, b), exact, 1, 1);
  });
  EXPECT_GT(q, 3.6);
  EXPECT_LT(q, 4.4);
}

TEST(Norms, WeightedIntegralMatchesCylinderIntegral) {
  auto g = grid(128, 128);
  auto f = ScalarField2D::sample(g, Parity::even, [](double r, double z) { return std::exp(-r * r - (z - pi) * (z - pi)); });
  // int exp(-2 r^2 - 2 (z-pi)^2) 2 pi r dr dz = 2 pi * (1/4) * sqrt(pi/2)
  EXPECT_NEAR(inner(f, f), 2 * pi * 0.25 * std::sqrt(pi / 2), 1e-3);
  EXPECT_NEAR(norm_lp(f, 2), norm_l2(f), 1e-12);
}
