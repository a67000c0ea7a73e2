#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "calculus.hpp"
#include "elliptic.hpp"
#include "spectral.hpp"

namespace axinsm {

inline NoSwirlVec2 masked(NoSwirlVec2 f) {
  f.zero_wall();
  return f;
}

// Everything the integrator needs from one state: derived fields, explicit
// sources and the energy ledger terms.
struct NSMEvaluation {
  DerivedFields fields;
  ScalarField2D potential;         // psi / r
  ScalarField2D vorticity_source;  // explicit part of the vorticity equation
  double kinetic_energy = 0;
  double em_energy = 0;
  double u_dissipation = 0;  // nu ||omega||^2
  double j_dissipation = 0;  // ||j||^2 / sigma
  double cfl_rate = 0;       // max|u_r|/dr + max|u_z|/dz

  double energy_total() const { return kinetic_energy + em_energy; }
  double dissipation() const { return u_dissipation + j_dissipation; }
};

namespace detail {

inline double advective_rate(const NoSwirlVec2& u) {
  const GridSpec& g = u.grid();
  return u.radial.max_abs() / g.dr() + u.axial.max_abs() / g.dz();
}

inline void fill_flow(DerivedFields& d, ScalarField2D& potential, const ScalarField2D& vorticity) {
  potential = stream_potential(vorticity);
  d.stream = multiply_by_r(potential);
  d.velocity = velocity_from_potential(potential);
  d.vorticity_over_r = divide_by_r(vorticity);
}

// -u.grad(omega) + (u_r/r) omega in Jacobian form -J(psi, omega/r).
inline ScalarField2D transport_term(const DerivedFields& d) {
  ScalarField2D out = arakawa_jacobian(d.stream, d.vorticity_over_r);
  out *= -1.0;
  return out;
}

// Vorticity forcing of the Lorentz force current x B, as the e_theta curl.
inline ScalarField2D lorentz_term(const NoSwirlVec2& current, const ScalarField2D& magnetic) {
  ScalarField2D out = curl_noswirl(masked(cross_with_swirl(current, magnetic)));
  out.zero_wall();
  return out;
}

}  // namespace detail

// Without coupling the Lorentz force is dropped, so the flow ignores the fields.
inline NSMEvaluation evaluate(const NSMState& s, const Params& p, bool coupled = true) {
  NSMEvaluation ev;
  DerivedFields& d = ev.fields;
  detail::fill_flow(d, ev.potential, s.vorticity);
  d.magnetic_over_r = divide_by_r(s.magnetic);
  d.induction = leray_project(cross_with_swirl(d.velocity, s.magnetic), 1e-8);
  d.current = masked(p.sigma * (p.c * s.electric + d.induction));

  ev.vorticity_source = detail::transport_term(d);
  if (coupled) ev.vorticity_source += detail::lorentz_term(d.current, s.magnetic);

  ev.kinetic_energy = 0.5 * inner(ev.potential, s.vorticity);
  ev.em_energy = 0.5 * (inner(s.electric, s.electric) + inner(s.magnetic, s.magnetic));
  ev.u_dissipation = p.nu * inner(s.vorticity, s.vorticity);
  ev.j_dissipation = inner(d.current, d.current) / p.sigma;
  ev.cfl_rate = detail::advective_rate(d.velocity);
  return ev;
}

inline DerivedFields derived(const NSMState& s, const Params& p) { return evaluate(s, p).fields; }

struct VorticityRhs {
  ScalarField2D explicit_part;
  ScalarField2D viscous_part;
};

inline VorticityRhs vorticity_rhs(const NSMState& s, const DerivedFields& d, const Params& p) {
  ScalarField2D expl = detail::transport_term(d);
  expl += detail::lorentz_term(d.current, s.magnetic);
  ScalarField2D visc = lap_minus(s.vorticity);
  visc *= p.nu;
  visc.zero_wall();
  return {std::move(expl), std::move(visc)};
}

struct MaxwellFields {
  NoSwirlVec2 electric;
  ScalarField2D magnetic;
};

namespace detail {

inline MaxwellFields maxwell_crank_nicolson(const NoSwirlVec2& e, const ScalarField2D& b, const NoSwirlVec2& source,
                                            double dt, const Params& p) {
  const double c = p.c, h = 0.5 * dt, gamma = 1 + h * p.relaxation_rate();
  // right-hand sides of (I - hL) X' = (I + hL) X + dt * f
  NoSwirlVec2 re = e;
  re *= 1 - h * p.relaxation_rate();
  re.axpy(h * c, masked(curl_swirl(b)));
  re.axpy(-dt * p.sigma * c, source);
  re.zero_wall();
  ScalarField2D rb = b;
  rb.axpy(-h * c, curl_noswirl(e));
  // eliminate E' = (re + h c curl B') / gamma
  ScalarField2D rhs = rb;
  rhs.axpy(-h * c / gamma, curl_noswirl(re));
  rhs.zero_wall();
  MaxwellFields out;
  out.magnetic = curl_curl_solve(rhs, h * c * h * c / gamma);
  out.electric = re;
  out.electric.axpy(h * c, masked(curl_swirl(out.magnetic)));
  out.electric *= 1.0 / gamma;
  out.electric.zero_wall();
  return out;
}

inline void damp_half(NoSwirlVec2& e, const NoSwirlVec2& source, double h, const Params& p) {
  const double a = p.relaxation_rate(), decay = std::exp(-a * h);
  // exact flow of dE/dt = -a E - sigma c S over time h
  e *= decay;
  e.axpy(-(1 - decay) / p.c, source);
  e.zero_wall();
}

inline MaxwellFields maxwell_exact_split(NoSwirlVec2 e, ScalarField2D b, const NoSwirlVec2& source, double dt,
                                         const Params& p) {
  damp_half(e, source, 0.5 * dt, p);
  const int substeps = std::max(1, static_cast<int>(std::ceil(p.c * dt * curl_spectral_bound(b.grid()))));
  const double delta = dt / substeps, c = p.c;
  for (int n = 0; n < substeps; ++n) {
    b.axpy(-0.5 * delta * c, curl_noswirl(e));
    b.zero_wall();
    e.axpy(delta * c, masked(curl_swirl(b)));
    b.axpy(-0.5 * delta * c, curl_noswirl(e));
    b.zero_wall();
  }
  damp_half(e, source, 0.5 * dt, p);
  return {std::move(e), std::move(b)};
}

}  // namespace detail

// Advances the linear Maxwell subsystem with the induction source held fixed.
inline MaxwellFields maxwell_update(const NoSwirlVec2& electric, const ScalarField2D& magnetic,
                                    const NoSwirlVec2& source, double dt, const Params& p) {
  MaxwellFields out = p.maxwell_scheme == MaxwellScheme::crank_nicolson
                          ? detail::maxwell_crank_nicolson(electric, magnetic, source, dt, p)
                          : detail::maxwell_exact_split(electric, magnetic, source, dt, p);
  if (!out.magnetic.finite() || !out.electric.radial.finite() || !out.electric.axial.finite())
    throw NumericalError("maxwell_update: non-finite fields");
  return out;
}

inline MaxwellFields maxwell_update(const NSMState& s, const NoSwirlVec2& source, double dt, const Params& p) {
  return maxwell_update(s.electric, s.magnetic, source, dt, p);
}

inline double div_e_residual(const NoSwirlVec2& e) {
  ScalarField2D d = div_noswirl(masked(e));
  d.zero_wall();
  return norm_l2(d);
}

// ||curl B - j|| in L^2 (s = 0, grid quadrature) or H^{1/2} (s = 1/2, 3D lift).
inline double ampere_residual(const NSMState& s, const DerivedFields& d, double order, int lift_n = 64) {
  NoSwirlVec2 r = masked(curl_swirl(s.magnetic)) - d.current;
  r.zero_wall();
  if (order == 0) return norm_l2(r);
  if (order == 0.5) return sobolev_norm(lift(r, lift_n), 0.5);
  throw Error("ampere_residual: order must be 0 or 1/2");
}

// One IMEX step: trapezoidal in the stiff linear part, Heun in the explicit sources.
class NSMIntegrator {
 public:
  NSMIntegrator(const Params& p, NSMState initial, bool coupled = true)
      : p_((p.validate(), p)), coupled_(coupled), state_(std::move(initial)), eval_(evaluate(state_, p_, coupled_)) {
    if (!(state_.grid() == p_.grid)) throw Error("NSMIntegrator: state grid differs from params grid");
  }

  const NSMState& state() const { return state_; }
  const NSMEvaluation& evaluation() const { return eval_; }
  const Params& params() const { return p_; }

  StepReport advance(double dt) {
    const double cfl = dt * eval_.cfl_rate;
    if (cfl > 1) throw CflViolation(cfl, p_.cfl_target / eval_.cfl_rate);

    NSMState predictor = propagate(eval_.vorticity_source, eval_.fields.induction, dt);
    NSMEvaluation mid = evaluate(predictor, p_, coupled_);
    ScalarField2D w_src = 0.5 * (eval_.vorticity_source + mid.vorticity_source);
    NoSwirlVec2 s_src = 0.5 * (eval_.fields.induction + mid.fields.induction);
    NSMState next = propagate(w_src, s_src, dt);
    if (!next.finite()) throw NumericalError("non-finite state after step at t = " + std::to_string(state_.t));
    NSMEvaluation next_eval = evaluate(next, p_, coupled_);

    StepReport rep;
    rep.t = next.t;
    rep.dt_used = dt;
    rep.cfl_advective = cfl;
    rep.energy_total = next_eval.energy_total();
    rep.energy_balance_residual =
        next_eval.energy_total() - eval_.energy_total() + 0.5 * dt * (eval_.dissipation() + next_eval.dissipation());
    rep.kinetic_energy = next_eval.kinetic_energy;
    rep.em_energy = next_eval.em_energy;
    rep.u_dissipation = next_eval.u_dissipation;
    rep.j_dissipation = next_eval.j_dissipation;
    rep.ampere_residual_L2 = ampere_residual(next, next_eval.fields, 0);
    rep.div_E_residual = div_e_residual(next.electric);

    state_ = std::move(next);
    eval_ = std::move(next_eval);
    return rep;
  }

  // Report describing the current state without stepping.
  StepReport snapshot_report() const {
    StepReport rep;
    rep.t = state_.t;
    rep.energy_total = eval_.energy_total();
    rep.kinetic_energy = eval_.kinetic_energy;
    rep.em_energy = eval_.em_energy;
    rep.u_dissipation = eval_.u_dissipation;
    rep.j_dissipation = eval_.j_dissipation;
    rep.ampere_residual_L2 = ampere_residual(state_, eval_.fields, 0);
    rep.div_E_residual = div_e_residual(state_.electric);
    return rep;
  }

  void set_time(double t) { state_.t = t; }

 private:
  NSMState propagate(const ScalarField2D& w_src, const NoSwirlVec2& s_src, double dt) const {
    const double h = 0.5 * dt;
    NSMState out;
    ScalarField2D rhs = state_.vorticity;
    rhs.axpy(h * p_.nu, lap_minus(state_.vorticity));
    rhs.axpy(dt, w_src);
    out.vorticity = viscous_solve(rhs, h * p_.nu);
    MaxwellFields em = maxwell_update(state_, s_src, dt, p_);
    out.electric = std::move(em.electric);
    out.magnetic = std::move(em.magnetic);
    out.t = state_.t + dt;
    return out;
  }

  Params p_;
  bool coupled_;
  NSMState state_;
  NSMEvaluation eval_;
};

inline std::pair<NSMState, StepReport> step(const NSMState& s, const Params& p) {
  NSMIntegrator integrator(p, s);
  StepReport rep = integrator.advance(p.dt);
  return {integrator.state(), rep};
}

// Substep end times for the macro step [start, end]. While the Ohmic layer is
// active (t - t0 < 10 / (sigma c^2)) steps of layer_step / (sigma c^2) are taken;
// the rest of the interval is split to keep the advective CFL below cfl_target.
inline std::vector<double> substep_plan(const Params& p, double start, double end, double t0, double cfl_rate) {
  std::vector<double> out;
  double from = start;
  const double rate = p.relaxation_rate();
  if (p.resolve_layer) {
    const double layer_end = std::min(end, t0 + 10.0 / rate);
    if (layer_end > from) {
      const int n = std::max(1, static_cast<int>(std::ceil((layer_end - from) * rate / p.layer_step - 1e-9)));
      for (int m = 1; m <= n; ++m) out.push_back(m == n ? layer_end : from + (layer_end - from) * m / n);
      from = layer_end;
    }
  }
  if (end > from * (1 + 1e-14)) {
    const int n = std::max(1, static_cast<int>(std::ceil((end - from) * cfl_rate / p.cfl_target - 1e-12)));
    for (int m = 1; m <= n; ++m) out.push_back(m == n ? end : from + (end - from) * m / n);
  }
  if (out.empty() || out.back() != end) out.push_back(end);
  return out;
}

struct StepEvent {
  const NSMState& state;
  const NSMEvaluation& evaluation;
  const StepReport& report;
  long macro_index;       // completed macro steps
  bool macro_boundary;    // state sits on the macro time grid
};

struct NSMRun {
  std::vector<NSMState> trajectory;
  NormLedger ledger;
  NSMState final_state;
  double cumulative_residual = 0;
  double initial_energy = 0;
  double dissipated = 0;  // time integral of the dissipation rate
  long steps = 0;
};

namespace detail {

inline long macro_steps(const Params& p) {
  if (p.t_end <= 0) return 0;
  return std::max(1L, static_cast<long>(std::llround(std::ceil(p.t_end / p.dt - 1e-9))));
}

inline void record_flow_norms(NormLedger& ledger, double t, const ScalarField2D& magnetic_over_r,
                              const ScalarField2D& vorticity_over_r, const NoSwirlVec2& velocity) {
  ledger.append(t, "gamma_L2", norm_lp(magnetic_over_r, 2));
  ledger.append(t, "gamma_L3", norm_lp(magnetic_over_r, 3));
  ledger.append(t, "gamma_L4", norm_lp(magnetic_over_r, 4));
  ledger.append(t, "Omega_L2", norm_l2(vorticity_over_r));
  ScalarField2D ur = velocity.radial;
  ur.zero_wall();
  ledger.append(t, "max_ur_over_r", divide_by_r(ur).max_abs());
}

inline void record_nsm(NormLedger& ledger, const StepReport& rep, const NSMEvaluation& ev, double cumulative) {
  const double t = rep.t;
  ledger.append(t, "kinetic_energy", rep.kinetic_energy);
  ledger.append(t, "em_energy", rep.em_energy);
  ledger.append(t, "energy_total", rep.energy_total);
  ledger.append(t, "u_dissipation", rep.u_dissipation);
  ledger.append(t, "j_dissipation", rep.j_dissipation);
  ledger.append(t, "energy_balance_residual", cumulative);
  ledger.append(t, "ampere_residual_L2", rep.ampere_residual_L2);
  ledger.append(t, "div_E_residual", rep.div_E_residual);
  ledger.append(t, "cfl_advective", rep.cfl_advective);
  ledger.append(t, "dt_used", rep.dt_used);
  record_flow_norms(ledger, t, ev.fields.magnetic_over_r, ev.fields.vorticity_over_r, ev.fields.velocity);
}

}  // namespace detail

struct RunOptions {
  int sample_every = 1;
  bool keep_trajectory = true;
  bool coupled = true;
};

// Integrates to t_end on the macro grid t_n = n * dt; every sample_every macro
// steps a ledger row is written and, if requested, the state is kept.
inline NSMRun run(const Params& p, const NSMState& initial, const RunOptions& opts = {},
                  const std::function<void(const StepEvent&)>& observer = {}) {
  if (opts.sample_every < 1) throw Error("run: sample_every must be positive");
  const int sample_every = opts.sample_every;
  const bool keep_trajectory = opts.keep_trajectory;
  NSMIntegrator integ(p, initial, opts.coupled);
  NSMRun out;
  const double t0 = initial.t;
  StepReport rep = integ.snapshot_report();
  out.initial_energy = rep.energy_total;
  detail::record_nsm(out.ledger, rep, integ.evaluation(), 0.0);
  if (keep_trajectory) out.trajectory.push_back(integ.state());
  if (observer) observer({integ.state(), integ.evaluation(), rep, 0, true});

  const long n_macro = detail::macro_steps(p);
  for (long n = 0; n < n_macro; ++n) {
    const double start = t0 + n * p.dt, end = std::min(t0 + (n + 1) * p.dt, t0 + p.t_end);
    const std::vector<double> targets = substep_plan(p, start, end, t0, integ.evaluation().cfl_rate);
    const int subs = static_cast<int>(targets.size());
    for (int m = 0; m < subs; ++m) {
      const double target = targets[m];
      const double prev_d = integ.evaluation().dissipation();
      rep = integ.advance(target - integ.state().t);
      integ.set_time(target);
      rep.t = target;
      out.cumulative_residual += rep.energy_balance_residual;
      out.dissipated += 0.5 * rep.dt_used * (prev_d + integ.evaluation().dissipation());
      ++out.steps;
      if (observer) observer({integ.state(), integ.evaluation(), rep, n + (m + 1 == subs ? 1 : 0), m + 1 == subs});
    }
    if ((n + 1) % sample_every == 0 || n + 1 == n_macro) {
      detail::record_nsm(out.ledger, rep, integ.evaluation(), out.cumulative_residual);
      if (keep_trajectory) out.trajectory.push_back(integ.state());
    }
  }
  out.final_state = integ.state();
  return out;
}

}  // namespace axinsm
