#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nsm.hpp"

namespace axinsm {

struct MHDEvaluation {
  DerivedFields fields;
  ScalarField2D potential;
  ScalarField2D vorticity_source;
  ScalarField2D magnetic_source;  // curl of the projected u x B
  double kinetic_energy = 0;
  double magnetic_energy = 0;
  double u_dissipation = 0;
  double j_dissipation = 0;
  double cfl_rate = 0;

  double energy_total() const { return kinetic_energy + magnetic_energy; }
  double dissipation() const { return u_dissipation + j_dissipation; }
};

// Coupling off gives plain axisymmetric Navier-Stokes for the vorticity.
inline MHDEvaluation evaluate(const MHDState& s, const Params& p, bool coupled = true) {
  MHDEvaluation ev;
  DerivedFields& d = ev.fields;
  const GridSpec& g = s.grid();
  detail::fill_flow(d, ev.potential, s.vorticity);
  d.magnetic_over_r = divide_by_r(s.magnetic);
  d.current = masked(curl_swirl(s.magnetic));
  ev.vorticity_source = detail::transport_term(d);
  ev.magnetic_source = ScalarField2D(g, Parity::odd);
  if (coupled) {
    d.induction = leray_project(cross_with_swirl(d.velocity, s.magnetic), 1e-8);
    ev.vorticity_source += detail::lorentz_term(d.current, s.magnetic);
    ev.magnetic_source = curl_noswirl(masked(d.induction));
    ev.magnetic_source.zero_wall();
  } else {
    d.induction = NoSwirlVec2(g);
  }
  ev.kinetic_energy = 0.5 * inner(ev.potential, s.vorticity);
  ev.magnetic_energy = 0.5 * inner(s.magnetic, s.magnetic);
  ev.u_dissipation = p.nu * inner(s.vorticity, s.vorticity);
  ev.j_dissipation = inner(d.current, d.current) / p.sigma;
  ev.cfl_rate = detail::advective_rate(d.velocity);
  return ev;
}

struct MHDRhs {
  ScalarField2D vorticity;
  ScalarField2D magnetic;
};

// Full time derivative of the state.
inline MHDRhs mhd_rhs(const MHDState& s, const Params& p) {
  MHDEvaluation ev = evaluate(s, p);
  MHDRhs out{ev.vorticity_source, ev.magnetic_source};
  ScalarField2D visc = lap_minus(s.vorticity);
  visc.zero_wall();
  out.vorticity.axpy(p.nu, visc);
  out.magnetic.axpy(-1.0 / p.sigma, curl_curl(s.magnetic));
  return out;
}

class MHDIntegrator {
 public:
  MHDIntegrator(const Params& p, MHDState initial, bool coupled = true)
      : p_((p.validate(), p)), coupled_(coupled), state_(std::move(initial)), eval_(evaluate(state_, p_, coupled_)) {
    if (!(state_.grid() == p_.grid)) throw Error("MHDIntegrator: state grid differs from params grid");
  }

  const MHDState& state() const { return state_; }
  const MHDEvaluation& evaluation() const { return eval_; }

  StepReport advance(double dt) {
    const double cfl = dt * eval_.cfl_rate;
    if (cfl > 1) throw CflViolation(cfl, p_.cfl_target / eval_.cfl_rate);

    MHDState predictor = propagate(eval_.vorticity_source, eval_.magnetic_source, dt);
    MHDEvaluation mid = evaluate(predictor, p_, coupled_);
    MHDState next = propagate(0.5 * (eval_.vorticity_source + mid.vorticity_source),
                              0.5 * (eval_.magnetic_source + mid.magnetic_source), dt);
    if (!next.finite()) throw NumericalError("non-finite MHD state after step at t = " + std::to_string(state_.t));
    MHDEvaluation next_eval = evaluate(next, p_, coupled_);

    StepReport rep = report_of(next_eval, next.t);
    rep.dt_used = dt;
    rep.cfl_advective = cfl;
    rep.energy_balance_residual =
        next_eval.energy_total() - eval_.energy_total() + 0.5 * dt * (eval_.dissipation() + next_eval.dissipation());
    state_ = std::move(next);
    eval_ = std::move(next_eval);
    return rep;
  }

  StepReport snapshot_report() const { return report_of(eval_, state_.t); }

  void set_time(double t) { state_.t = t; }

 private:
  static StepReport report_of(const MHDEvaluation& ev, double t) {
    StepReport rep;
    rep.t = t;
    rep.energy_total = ev.energy_total();
    rep.kinetic_energy = ev.kinetic_energy;
    rep.em_energy = ev.magnetic_energy;
    rep.u_dissipation = ev.u_dissipation;
    rep.j_dissipation = ev.j_dissipation;
    return rep;
  }

  MHDState propagate(const ScalarField2D& w_src, const ScalarField2D& b_src, double dt) const {
    const double h = 0.5 * dt;
    MHDState out;
    ScalarField2D rw = state_.vorticity;
    rw.axpy(h * p_.nu, lap_minus(state_.vorticity));
    rw.axpy(dt, w_src);
    out.vorticity = viscous_solve(rw, h * p_.nu);
    ScalarField2D rb = state_.magnetic;
    rb.axpy(-h / p_.sigma, curl_curl(state_.magnetic));
    rb.axpy(dt, b_src);
    rb.zero_wall();
    out.magnetic = curl_curl_solve(rb, h / p_.sigma);
    out.t = state_.t + dt;
    return out;
  }

  Params p_;
  bool coupled_;
  MHDState state_;
  MHDEvaluation eval_;
};

inline std::pair<MHDState, StepReport> step_mhd(const MHDState& s, const Params& p, bool coupled = true) {
  MHDIntegrator integrator(p, s, coupled);
  StepReport rep = integrator.advance(p.dt);
  return {integrator.state(), rep};
}

struct MHDRun {
  std::vector<MHDState> trajectory;
  NormLedger ledger;
  MHDState final_state;
  double cumulative_residual = 0;
  double initial_energy = 0;
  double dissipated = 0;
  long steps = 0;
};

struct MHDEvent {
  const MHDState& state;
  const MHDEvaluation& evaluation;
  const StepReport& report;
  long macro_index;
  bool macro_boundary;
};

namespace detail {

inline void record_mhd(NormLedger& ledger, const StepReport& rep, const MHDEvaluation& ev, double cumulative) {
  const double t = rep.t;
  ledger.append(t, "kinetic_energy", rep.kinetic_energy);
  ledger.append(t, "em_energy", rep.em_energy);
  ledger.append(t, "energy_total", rep.energy_total);
  ledger.append(t, "u_dissipation", rep.u_dissipation);
  ledger.append(t, "j_dissipation", rep.j_dissipation);
  ledger.append(t, "energy_balance_residual", cumulative);
  ledger.append(t, "cfl_advective", rep.cfl_advective);
  ledger.append(t, "dt_used", rep.dt_used);
  record_flow_norms(ledger, t, ev.fields.magnetic_over_r, ev.fields.vorticity_over_r, ev.fields.velocity);
}

}  // namespace detail

// Same macro grid and sampling rules as the NSM run; substeps only resolve the CFL.
inline MHDRun run_mhd(const Params& p, const MHDState& initial, const RunOptions& opts = {},
                      const std::function<void(const MHDEvent&)>& observer = {}) {
  if (opts.sample_every < 1) throw Error("run_mhd: sample_every must be positive");
  const int sample_every = opts.sample_every;
  const bool keep_trajectory = opts.keep_trajectory;
  MHDIntegrator integ(p, initial, opts.coupled);
  MHDRun out;
  const double t0 = initial.t;
  StepReport rep = integ.snapshot_report();
  out.initial_energy = rep.energy_total;
  detail::record_mhd(out.ledger, rep, integ.evaluation(), 0.0);
  if (keep_trajectory) out.trajectory.push_back(integ.state());
  if (observer) observer({integ.state(), integ.evaluation(), rep, 0, true});

  const long n_macro = detail::macro_steps(p);
  for (long n = 0; n < n_macro; ++n) {
    const double start = t0 + n * p.dt, end = std::min(t0 + (n + 1) * p.dt, t0 + p.t_end);
    const double dt = end - start;
    const int subs = std::max(1, static_cast<int>(std::ceil(dt * integ.evaluation().cfl_rate / p.cfl_target - 1e-12)));
    for (int m = 0; m < subs; ++m) {
      const double target = m + 1 == subs ? end : start + dt * (m + 1) / subs;
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
      detail::record_mhd(out.ledger, rep, integ.evaluation(), out.cumulative_residual);
      if (keep_trajectory) out.trajectory.push_back(integ.state());
    }
  }
  out.final_state = integ.state();
  return out;
}

// Relative gap between (dB/dt)/r from the solver and the transport-diffusion
// law dG/dt = -u.grad G + (1/sigma)(Laplacian + (2/r) d/dr) G for G = B/r,
// off the axis and wall rows.
inline double gamma_evolution_check(const MHDState& s, const Params& p) {
  MHDEvaluation ev = evaluate(s, p);
  MHDRhs rhs = mhd_rhs(s, p);
  ScalarField2D solver = divide_by_r(rhs.magnetic);
  const ScalarField2D& gamma = ev.fields.magnetic_over_r;
  ScalarField2D law = lap_plus(gamma);
  law *= 1.0 / p.sigma;
  law -= multiply(ev.fields.velocity.radial, ddr(gamma));
  law -= multiply(ev.fields.velocity.axial, ddz(gamma));
  for (ScalarField2D* f : {&solver, &law}) {
    f->zero_wall();
    std::fill_n(f->row(0), p.grid.Nz, 0.0);
  }
  const double scale = std::max(norm_l2(law), norm_l2(solver));
  return scale == 0 ? 0.0 : norm_l2(solver - law) / scale;
}

// Magnetic state of the NSM limit: drops the electric field.
inline MHDState to_mhd(const NSMState& s) {
  MHDState out;
  out.vorticity = s.vorticity;
  out.magnetic = s.magnetic;
  out.t = s.t;
  return out;
}

}  // namespace axinsm
