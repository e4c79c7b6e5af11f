#include "gcflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "gcflow/error.hpp"

namespace gcflow {

FlowSetup make_flow_setup(SpeedLaw law, ScalarField u0) {
  FlowSetup s;
  s.law = std::move(law);
  s.increments = boundary_increments(u0);
  s.u0 = std::move(u0);
  return s;
}

std::vector<double> boundary_increments(const ScalarField& u0) {
  const auto& stencils = u0.topology().boundary_stencils;
  std::vector<double> inc;
  inc.reserve(stencils.size());
  for (const auto& s : stencils) inc.push_back(u0[s.node] - s.cell.interpolate(u0));
  return inc;
}

void apply_boundary(ScalarField& u, std::span<const double> increments) {
  const auto& stencils = u.topology().boundary_stencils;
  if (increments.size() != stencils.size()) {
    throw Error(ErrorKind::precondition, "increment count does not match boundary stencils");
  }
  // stencils only read interior nodes, so the order of updates is irrelevant
  for (std::size_t b = 0; b < stencils.size(); ++b) {
    u[stencils[b].node] = stencils[b].cell.interpolate(u) + increments[b];
  }
}

void advance(ScalarField& u, const ScalarField& rate, double dt,
             std::span<const double> increments) {
  for (std::size_t k : u.topology().interior_nodes) u[k] += dt * rate[k];
  apply_boundary(u, increments);
}

double stable_dt(const ScalarField& u, double sigma) {
  const auto& g = u.grid();
  double rate = 0.0;
  for (std::size_t k : u.topology().interior_nodes) {
    const HessianSample s = hessian_at(u, k);
    if (!(s.det > 0.0 && s.uxx > 0.0)) throw ConvexityLost(k, s.det, s.uxx);
    rate = std::max(rate, explicit_rate(s, g.hx(), g.hy()));
  }
  return sigma / rate;
}

FlowState initial_state(const FlowSetup& setup) {
  FlowState st;
  st.u = setup.u0;
  apply_boundary(st.u, setup.increments);
  return st;
}

void step(FlowState& state, const FlowSetup& setup, double dt) {
  const ScalarField udot = rhs_field(state.u, setup.law);
  ScalarField next = state.u;
  advance(next, udot, dt, setup.increments);
  const ConvexityReport rep = convexity_check(next);
  if (!rep.convex()) {
    const std::size_t k = rep.min_det > 0.0 ? rep.argmin_uxx : rep.argmin_det;
    const HessianSample s = hessian_at(next, k);
    throw ConvexityLost(k, s.det, s.uxx);
  }
  state.u = std::move(next);
  state.t += dt;
  state.last_dt = dt;
  ++state.step_count;
}

DiagnosticsSample diagnostics(const ScalarField& udot, double t, std::int64_t step) {
  DiagnosticsSample d;
  d.t = t;
  d.step = step;
  const auto& nodes = udot.topology().interior_nodes;
  d.v_bar = udot.interior_mean();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sq = 0.0;
  for (std::size_t k : nodes) {
    const double v = udot[k];
    sq += (v - d.v_bar) * (v - d.v_bar);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    d.max_abs_udot = std::max(d.max_abs_udot, std::abs(v));
  }
  d.delta = sq * udot.grid().hx() * udot.grid().hy();
  d.osc_udot = hi - lo;
  d.rate = t > 0.0 ? -std::log(d.delta) / t : std::numeric_limits<double>::quiet_NaN();
  return d;
}

TranslatorEstimate translator_estimate(const ScalarField& u, const ScalarField& udot) {
  TranslatorEstimate est;
  est.speed = udot.interior_mean();
  est.profile = u + (-u.interior_mean());
  for (std::size_t k : u.topology().interior_nodes) {
    est.residual_sup = std::max(est.residual_sup, std::abs(udot[k] - est.speed));
  }
  return est;
}

FlowResult run(const FlowSetup& setup, const FlowOptions& opt,
               const SnapshotObserver& on_snapshot) {
  if (!(opt.sigma > 0.0 && opt.sigma <= 0.5)) {
    throw Error(ErrorKind::config, "dt safety factor must lie in (0, 0.5]");
  }
  if (!(opt.t_end >= 0.0)) throw Error(ErrorKind::config, "t_end must be nonnegative");
  if (opt.record_every < 1) throw Error(ErrorKind::config, "record_every must be >= 1");

  std::vector<double> snaps = opt.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  std::erase_if(snaps, [&](double s) { return s < 0.0 || s > opt.t_end; });
  auto next_snap = snaps.begin();

  FlowResult res;
  res.state = initial_state(setup);
  FlowState& st = res.state;
  double rate = 0.0;
  ScalarField udot = rhs_field(st.u, setup.law, &rate);

  auto record = [&] { res.trace.samples.push_back(diagnostics(udot, st.t, st.step_count)); };
  auto maybe_snapshot = [&] {
    while (next_snap != snaps.end() && *next_snap <= st.t) {
      if (on_snapshot) on_snapshot(st.t, st.u, udot);
      ++next_snap;
    }
  };

  record();
  maybe_snapshot();

  while (st.t < opt.t_end) {
    if (opt.delta_tol > 0.0 && res.trace.samples.back().delta <= opt.delta_tol &&
        res.trace.samples.back().step == st.step_count) {
      res.delta_tol_reached = true;
      break;
    }
    if (st.step_count >= opt.max_steps) {
      res.non_convergence = true;
      break;
    }
    const double target = next_snap != snaps.end() ? std::min(*next_snap, opt.t_end) : opt.t_end;
    double dt = opt.sigma / rate;
    bool clipped = false;
    if (st.t + dt >= target) {
      dt = target - st.t;
      clipped = true;
    }

    ScalarField next;
    ScalarField next_udot;
    double next_rate = 0.0;
    for (int attempt = 0;; ++attempt) {
      next = st.u;
      advance(next, udot, dt, setup.increments);
      try {
        next_udot = rhs_field(next, setup.law, &next_rate);
        break;
      } catch (const ConvexityLost&) {
        if (attempt >= opt.max_halvings) throw;
        dt *= 0.5;
        clipped = false;
        ++res.halvings;
      }
    }
    st.u = std::move(next);
    udot = std::move(next_udot);
    rate = next_rate;
    st.t = clipped ? target : st.t + dt;
    st.last_dt = dt;
    ++st.step_count;

    const bool at_end = st.t >= opt.t_end;
    if (st.step_count % opt.record_every == 0 || at_end) {
      record();
    } else if (opt.delta_tol > 0.0) {
      // early-exit test needs the current delta
      const auto d = diagnostics(udot, st.t, st.step_count);
      if (d.delta <= opt.delta_tol) res.trace.samples.push_back(d);
    }
    maybe_snapshot();
  }

  const auto& last = res.trace.samples.back();
  if (opt.delta_tol > 0.0) {
    res.delta_tol_reached = res.delta_tol_reached || last.delta <= opt.delta_tol;
    res.non_convergence = res.non_convergence || !res.delta_tol_reached;
  }
  res.translator = translator_estimate(st.u, udot);
  return res;
}

MaxPrincipleReport max_principle_monitor(const DiagnosticsTrace& trace,
                                         std::int64_t transient_steps,
                                         double relative_tolerance) {
  if (trace.samples.empty()) throw Error(ErrorKind::precondition, "empty diagnostics trace");
  auto ref = std::find_if(trace.samples.begin(), trace.samples.end(),
                          [&](const DiagnosticsSample& s) { return s.step >= transient_steps; });
  if (ref == trace.samples.end()) ref = std::prev(trace.samples.end());
  MaxPrincipleReport rep;
  rep.reference = ref->max_abs_udot;
  rep.reference_time = ref->t;
  for (auto it = ref; it != trace.samples.end(); ++it) {
    rep.value = std::max(rep.value, it->max_abs_udot - rep.reference);
  }
  rep.tolerance = relative_tolerance * rep.reference;
  rep.violated = rep.value > rep.tolerance;
  return rep;
}

OscillationReport oscillation_monitor(const DiagnosticsTrace& trace,
                                      std::int64_t transient_steps,
                                      double relative_tolerance) {
  if (trace.samples.empty()) throw Error(ErrorKind::precondition, "empty diagnostics trace");
  auto ref = std::find_if(trace.samples.begin(), trace.samples.end(),
                          [&](const DiagnosticsSample& s) { return s.step >= transient_steps; });
  if (ref == trace.samples.end()) ref = std::prev(trace.samples.end());
  OscillationReport rep;
  rep.reference = ref->osc_udot;
  double running_min = ref->osc_udot;
  for (auto it = ref; it != trace.samples.end(); ++it) {
    running_min = std::min(running_min, it->osc_udot);
    rep.value = std::max(rep.value, it->osc_udot - running_min);
  }
  rep.tolerance = relative_tolerance * rep.reference;
  rep.violated = rep.value > rep.tolerance;
  return rep;
}

}  // namespace gcflow
