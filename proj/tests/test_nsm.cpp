#include <axinsm/nsm.hpp>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace axinsm;
using axtest::bump_state;
using axtest::grid;

namespace {

Params small_params(double c = 4, int n = 32) {
  Params p;
  p.grid = grid(n, n);
  p.c = c;
  p.sigma = 4;
  p.nu = 0.1;
  p.dt = 2e-3;
  p.t_end = 0.02;
  p.resolve_layer = false;
  return p;
}

// Electric field chosen so that the initial current equals curl B.
NSMState prepared(const Params& p, double a = 1.0) {
  NSMState s = bump_state(p.grid, a, 0.35);
  NSMEvaluation ev = evaluate(s, p);
  s.electric = (1.0 / p.sigma) * masked(curl_swirl(s.magnetic)) - ev.fields.induction;
  s.electric *= 1.0 / p.c;
  s.electric.zero_wall();
  return s;
}

double state_distance(const NSMState& a, const NSMState& b) {
  return norm_l2(a.vorticity - b.vorticity) + norm_l2(a.magnetic - b.magnetic) + norm_l2(a.electric - b.electric);
}

}  // namespace

TEST(NSM, ZeroStateStaysZero) {
  Params p = small_params();
  NSMState zero(p.grid);
  auto [next, rep] = step(zero, p);
  EXPECT_EQ(next.vorticity.max_abs(), 0.0);
  EXPECT_EQ(next.magnetic.max_abs(), 0.0);
  EXPECT_EQ(norm_l2(next.electric), 0.0);
  EXPECT_EQ(rep.energy_total, 0.0);
  EXPECT_DOUBLE_EQ(next.t, p.dt);
}

TEST(NSM, DerivedFieldsAreConsistent) {
  Params p = small_params();
  NSMState s = prepared(p);
  DerivedFields d = derived(s, p);
  EXPECT_LT(norm_l2(d.velocity - velocity_from_stream(d.stream)), 1e-10 * norm_l2(d.velocity));
  NoSwirlVec2 current = masked(curl_swirl(s.magnetic));
  EXPECT_LT(norm_l2(d.current - current), 1e-10 * norm_l2(current));
  EXPECT_LT(ampere_residual(s, d, 0), 1e-10 * norm_l2(current));
  EXPECT_LT(div_e_residual(d.induction), 1e-8 * norm_l2(d.induction) / p.grid.dr());
}

TEST(NSM, TransportConservesKineticEnergy) {
  Params p = small_params();
  NSMState s = bump_state(p.grid, 1.0, 0.35);
  s.vorticity += bump_state(p.grid, 0.7, 0.5).vorticity;
  NSMEvaluation ev = evaluate(s, p);
  const ScalarField2D transport = detail::transport_term(ev.fields);
  EXPECT_LT(std::abs(inner(ev.potential, transport)), 1e-12 * norm_l2(ev.potential) * norm_l2(transport));
}

TEST(NSM, LorentzWorkMatchesCurrentExchange) {
  Params p = small_params();
  NSMState s = prepared(p);
  s.magnetic = ScalarField2D::sample(p.grid, Parity::odd,
                                     [](double r, double z) { return r * std::exp(-(r * r + (z - 3.5) * (z - 3.5)) / 0.2); });
  NSMEvaluation ev = evaluate(s, p);
  // work of j x B on u equals minus the work of u x B against j
  const double fluid = inner(ev.potential, detail::lorentz_term(ev.fields.current, s.magnetic));
  const double field = inner(ev.fields.current, ev.fields.induction);
  EXPECT_NEAR(fluid, -field, 1e-10 * std::abs(field));
}

TEST(NSM, VorticityRhsSplitsSources) {
  Params p = small_params();
  NSMState s = prepared(p);
  NSMEvaluation ev = evaluate(s, p);
  VorticityRhs rhs = vorticity_rhs(s, ev.fields, p);
  EXPECT_LT(norm_l2(rhs.explicit_part - ev.vorticity_source), 1e-14 * norm_l2(rhs.explicit_part));
  ScalarField2D visc = p.nu * lap_minus(s.vorticity);
  visc.zero_wall();
  EXPECT_EQ(rhs.viscous_part, visc);
}

TEST(NSM, EnergyResidualIsSecondOrderInTime) {
  Params p = small_params(8, 64);
  p.t_end = 0.1;
  NSMState s = prepared(p);
  double res[2];
  int n = 0;
  for (double dt : {4e-3, 2e-3}) {
    p.dt = dt;
    NSMRun r = run(p, s, {1000, false});
    res[n++] = std::abs(r.cumulative_residual);
    EXPECT_LT(res[n - 1], 1e-3 * r.initial_energy);
  }
  EXPECT_GT(res[0] / res[1], 3.0);
  EXPECT_LT(res[0] / res[1], 5.0);
}

TEST(NSM, StateConvergesSecondOrderInTime) {
  Params p = small_params(4, 32);
  p.t_end = 0.08;
  NSMState s = prepared(p);
  NSMState out[3];
  int n = 0;
  for (double dt : {8e-3, 4e-3, 2e-3}) {
    p.dt = dt;
    out[n++] = run(p, s, {1000, false}).final_state;
  }
  const double ratio = state_distance(out[0], out[1]) / state_distance(out[1], out[2]);
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.0);
}

TEST(NSM, MaxwellSchemesAgree) {
  Params p = small_params(4, 32);
  p.t_end = 0.04;
  p.dt = 1e-3;
  NSMState s = prepared(p);
  NSMState cn = run(p, s, {1000, false}).final_state;
  p.maxwell_scheme = MaxwellScheme::exact_split;
  NSMState split = run(p, s, {1000, false}).final_state;
  EXPECT_LT(state_distance(cn, split), 1e-3 * (norm_l2(s.vorticity) + norm_l2(s.magnetic)));
}

TEST(NSM, MaxwellUpdateDissipatesWithoutSource) {
  Params p = small_params(16, 32);
  NSMState s = prepared(p);
  NoSwirlVec2 none(p.grid);
  for (MaxwellScheme scheme : {MaxwellScheme::crank_nicolson, MaxwellScheme::exact_split}) {
    p.maxwell_scheme = scheme;
    const double before = inner(s.electric, s.electric) + inner(s.magnetic, s.magnetic);
    MaxwellFields f = maxwell_update(s, none, 0.05, p);
    const double after = inner(f.electric, f.electric) + inner(f.magnetic, f.magnetic);
    EXPECT_LT(after, before);
    EXPECT_GT(after, 0.0);
  }
}

TEST(NSM, ExactSplitDampsCurlFreeFieldExactly) {
  Params p = small_params(2, 32);
  p.maxwell_scheme = MaxwellScheme::exact_split;
  auto phi = ScalarField2D::sample(p.grid, Parity::even,
                                   [](double r, double z) { return std::exp(-4 * (r * r + (z - pi) * (z - pi))); });
  NoSwirlVec2 e = masked(gradient(phi));
  ScalarField2D b(p.grid, Parity::odd);
  MaxwellFields f = maxwell_update(e, b, NoSwirlVec2(p.grid), 0.1, p);
  const double decay = std::exp(-p.relaxation_rate() * 0.1);
  EXPECT_LT(norm_l2(f.electric - decay * e), 1e-10 * norm_l2(e));
  EXPECT_LT(f.magnetic.max_abs(), 1e-10 * e.radial.max_abs());
}

TEST(NSM, EnergyInequalityAcrossSpeeds) {
  for (double c : {1.0, 30.0}) {
    Params p = small_params(c, 32);
    p.t_end = 0.05;
    p.dt = 5e-3;
    p.resolve_layer = true;
    NSMRun r = run(p, prepared(p), {2, false});
    const double final_energy = r.ledger.series("energy_total").back().second;
    EXPECT_LT(final_energy + r.dissipated, r.initial_energy * (1 + 1e-3));
    EXPECT_LT(final_energy, r.initial_energy);
  }
}

TEST(NSM, RunLedgerAndTrajectory) {
  Params p = small_params();
  p.t_end = 0;
  NSMState s = prepared(p);
  NSMRun empty = run(p, s);
  EXPECT_EQ(empty.steps, 0);
  EXPECT_EQ(empty.trajectory.size(), 1u);
  EXPECT_EQ(empty.final_state, s);
  EXPECT_EQ(empty.ledger.series("energy_total").size(), 1u);

  p.t_end = 0.01;
  p.dt = 2e-3;
  long boundaries = 0;
  NSMRun r = run(p, s, {2}, [&](const StepEvent& ev) { boundaries += ev.macro_boundary; });
  EXPECT_EQ(r.steps, 5);
  EXPECT_EQ(boundaries, 6);
  EXPECT_EQ(r.trajectory.size(), 4u);
  EXPECT_DOUBLE_EQ(r.final_state.t, 0.01);
  for (const char* name : {"gamma_L2", "gamma_L3", "gamma_L4", "Omega_L2", "max_ur_over_r", "div_E_residual"})
    EXPECT_TRUE(r.ledger.has(name)) << name;
  EXPECT_THROW(run(p, s, {0}), Error);
}

TEST(NSM, SubstepPlan) {
  Params p = small_params(64);
  p.resolve_layer = true;
  const double rate = p.relaxation_rate(), layer = 10.0 / rate;
  auto plan = substep_plan(p, 0.0, 2e-3, 0.0, 0.0);
  const auto fine = static_cast<std::size_t>(std::ceil(layer * rate / p.layer_step - 1e-9));
  ASSERT_EQ(plan.size(), fine + 1);
  EXPECT_DOUBLE_EQ(plan[fine - 1], layer);
  EXPECT_DOUBLE_EQ(plan.back(), 2e-3);
  for (std::size_t i = 1; i < fine; ++i) EXPECT_LE(plan[i] - plan[i - 1], p.layer_step / rate * (1 + 1e-12));
  EXPECT_EQ(substep_plan(p, 1.0, 1.002, 0.0, 0.0).size(), 1u);
  EXPECT_EQ(substep_plan(p, 1.0, 1.002, 0.0, 1000.0).size(), 4u);
  p.resolve_layer = false;
  EXPECT_EQ(substep_plan(p, 0.0, 2e-3, 0.0, 0.0), std::vector<double>{2e-3});
}

TEST(NSM, CflViolationCarriesSuggestion) {
  Params p = small_params();
  NSMIntegrator integ(p, prepared(p, 5.0));
  const double rate = integ.evaluation().cfl_rate;
  try {
    integ.advance(2.0 / rate);
    FAIL() << "expected a CFL violation";
  } catch (const CflViolation& e) {
    EXPECT_GT(e.cfl, 1.0);
    EXPECT_NEAR(e.suggested_dt, p.cfl_target / rate, 1e-12);
  }
}

TEST(NSM, RejectsInvalidParams) {
  Params p = small_params();
  p.sigma = -1;
  EXPECT_THROW(NSMIntegrator(p, NSMState(p.grid)), Error);
  Params q = small_params();
  EXPECT_THROW(NSMIntegrator(q, NSMState(grid(16, 16))), Error);
}
