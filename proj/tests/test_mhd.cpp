#include <axinsm/mhd.hpp>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace axinsm;
using axtest::grid;

namespace {

Params mhd_params(int n = 32) {
  Params p;
  p.grid = grid(n, n);
  p.sigma = 4;
  p.nu = 0.1;
  p.dt = 2e-3;
  p.t_end = 0.02;
  return p;
}

MHDState bump(const GridSpec& g, double a = 1.0) {
  MHDState s = to_mhd(axtest::bump_state(g, a, 0.35));
  s.magnetic += ScalarField2D::sample(
      g, Parity::odd, [](double r, double z) { return 0.5 * r * std::exp(-(r * r + (z - 3.6) * (z - 3.6)) / 0.2); });
  return s;
}

}  // namespace

TEST(MHD, LorentzCurlFormMatchesPressureFreeForm) {
  auto profile = [](double r, double z) { return r * std::exp(-(r * r + (z - pi) * (z - pi)) / 0.3); };
  // -d/dz (B^2 / r)
  auto exact = [&](double r, double z) {
    const double b = profile(r, z);
    return -2 * b * b / r * (-2 * (z - pi) / 0.3);
  };
  double err[2];
  int n = 0;
  for (int N : {64, 128}) {
    auto g = grid(N, N);
    auto b = ScalarField2D::sample(g, Parity::odd, profile);
    err[n++] = axtest::max_error(detail::lorentz_term(masked(curl_swirl(b)), b), exact, 1, 1);
  }
  EXPECT_GT(err[0] / err[1], 3.5);
  EXPECT_LT(err[0] / err[1], 4.5);
}

TEST(MHD, GammaLawHoldsToSecondOrder) {
  double res[2];
  int n = 0;
  for (int N : {64, 128}) {
    Params p = mhd_params(N);
    res[n++] = gamma_evolution_check(bump(p.grid), p);
  }
  EXPECT_LT(res[1], 2e-2);
  EXPECT_GT(res[0] / res[1], 3.0);
}

TEST(MHD, ZeroFieldMatchesUncoupledNavierStokes) {
  Params p = mhd_params();
  MHDState s = bump(p.grid);
  s.magnetic = ScalarField2D(p.grid, Parity::odd);
  MHDRun coupled = run_mhd(p, s, {1, false, true});
  MHDRun plain = run_mhd(p, s, {1, false, false});
  EXPECT_TRUE(coupled.final_state == plain.final_state);
  EXPECT_EQ(coupled.final_state.magnetic.max_abs(), 0.0);
}

TEST(MHD, EnergyResidualIsSecondOrderInTime) {
  Params p = mhd_params(48 + 16);
  p.t_end = 0.1;
  MHDState s = bump(p.grid);
  double res[2];
  int n = 0;
  for (double dt : {4e-3, 2e-3}) {
    p.dt = dt;
    MHDRun r = run_mhd(p, s, {1000, false});
    res[n++] = std::abs(r.cumulative_residual);
    EXPECT_LT(res[n - 1], 1e-3 * r.initial_energy);
  }
  EXPECT_GT(res[0] / res[1], 3.0);
  EXPECT_LT(res[0] / res[1], 5.0);
}

TEST(MHD, EnergyDecays) {
  Params p = mhd_params();
  p.t_end = 0.1;
  p.dt = 5e-3;
  MHDRun r = run_mhd(p, bump(p.grid), {2, false});
  auto e = r.ledger.series("energy_total");
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i].second, e[i - 1].second);
  EXPECT_NEAR(e.back().second + r.dissipated, r.initial_energy, 1e-3 * r.initial_energy);
}

TEST(MHD, RhsMatchesSingleStepDifference) {
  Params p = mhd_params();
  MHDState s = bump(p.grid);
  MHDRhs rhs = mhd_rhs(s, p);
  double err[2];
  int n = 0;
  for (double dt : {1e-3, 5e-4}) {
    p.dt = dt;
    auto [next, rep] = step_mhd(s, p);
    ScalarField2D fd = (1.0 / dt) * (next.magnetic - s.magnetic);
    err[n++] = norm_l2(fd - rhs.magnetic);
  }
  EXPECT_GT(err[0] / err[1], 1.8);
  EXPECT_LT(err[1], 0.05 * norm_l2(rhs.magnetic));
}

TEST(MHD, NsmLimitApproachesMhd) {
  Params p = mhd_params();
  p.t_end = 0.04;
  MHDState m = bump(p.grid);
  MHDState ref = run_mhd(p, m, {1000, false}).final_state;
  double err[2];
  int n = 0;
  for (double c : {16.0, 64.0}) {
    p.c = c;
    NSMState s(p.grid);
    s.vorticity = m.vorticity;
    s.magnetic = m.magnetic;
    NSMEvaluation ev = evaluate(s, p);
    s.electric = (1.0 / (p.sigma * c)) * masked(curl_swirl(s.magnetic)) - (1.0 / c) * ev.fields.induction;
    s.electric.zero_wall();
    MHDState got = to_mhd(run(p, s, {1000, false}).final_state);
    err[n++] = norm_l2(got.magnetic - ref.magnetic) + norm_l2(got.vorticity - ref.vorticity);
  }
  EXPECT_GT(err[0] / err[1], 8.0);
}

TEST(MHD, LedgerAndEvents) {
  Params p = mhd_params();
  long events = 0;
  MHDRun r = run_mhd(p, bump(p.grid), {5}, [&](const MHDEvent&) { ++events; });
  EXPECT_EQ(r.steps, 10);
  EXPECT_EQ(events, 11);
  EXPECT_EQ(r.trajectory.size(), 3u);
  EXPECT_EQ(r.ledger.series("gamma_L4").size(), 3u);
  EXPECT_THROW(run_mhd(p, bump(p.grid), {0}), Error);
}
