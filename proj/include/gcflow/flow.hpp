#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gcflow/field_ops.hpp"

namespace gcflow {

/// Everything the explicit stepper needs besides the current state.
struct FlowSetup {
  SpeedLaw law;
  ScalarField u0;
  /// u0(x0) - u0(y0) per boundary stencil, u0(y0) bilinearly interpolated.
  std::vector<double> increments;
};

/// Builds a setup; u0 is sampled on the topology already.
FlowSetup make_flow_setup(SpeedLaw law, ScalarField u0);

std::vector<double> boundary_increments(const ScalarField& u0);

/// u(x0) = u(y0) + increment for every boundary node.
void apply_boundary(ScalarField& u, std::span<const double> increments);

/// Interior forward-Euler update u += dt * rate, then the boundary update.
void advance(ScalarField& u, const ScalarField& rate, double dt,
             std::span<const double> increments);

/// sigma / max(u^11/hx^2 + u^22/hy^2 + |u^12|/(hx hy)). Throws ConvexityLost.
double stable_dt(const ScalarField& u, double sigma = 0.4);

struct FlowState {
  ScalarField u;
  double t = 0.0;
  std::int64_t step_count = 0;
  double last_dt = 0.0;
};

FlowState initial_state(const FlowSetup& setup);

/// One explicit step. On ConvexityLost the state is left untouched.
void step(FlowState& state, const FlowSetup& setup, double dt);

struct DiagnosticsSample {
  double t = 0.0;
  std::int64_t step = 0;
  double v_bar = 0.0;
  double delta = 0.0;
  double rate = 0.0;  // NaN at t = 0
  double max_abs_udot = 0.0;
  double osc_udot = 0.0;
};

struct DiagnosticsTrace {
  std::vector<DiagnosticsSample> samples;
};

DiagnosticsSample diagnostics(const ScalarField& udot, double t, std::int64_t step);

struct TranslatorEstimate {
  ScalarField profile;  // interior mean removed
  double speed = 0.0;
  double residual_sup = 0.0;
};

/// Speed = mean of udot, profile = u - interior mean, residual = sup|udot - speed|.
TranslatorEstimate translator_estimate(const ScalarField& u, const ScalarField& udot);

struct FlowOptions {
  double sigma = 0.4;
  double t_end = 1.0;
  double delta_tol = 0.0;  // <= 0 disables early exit
  int record_every = 10;
  std::vector<double> snapshot_times;
  int max_halvings = 8;
  std::int64_t max_steps = 50'000'000;
};

struct FlowResult {
  FlowState state;
  DiagnosticsTrace trace;
  TranslatorEstimate translator;
  bool delta_tol_reached = false;
  bool non_convergence = false;  // delta_tol set but unreached, or step cap hit
  int halvings = 0;              // total dt halvings performed
};

using SnapshotObserver =
    std::function<void(double t, const ScalarField& u, const ScalarField& udot)>;

/// Integrates until t_end (or delta <= delta_tol). Time steps are clipped so
/// that snapshot times and t_end are hit exactly.
FlowResult run(const FlowSetup& setup, const FlowOptions& options,
               const SnapshotObserver& on_snapshot = {});

struct MaxPrincipleReport {
  double reference = 0.0;       // max|udot| at the first post-transient sample
  double reference_time = 0.0;
  double value = 0.0;           // largest increase over the reference, >= 0
  double tolerance = 0.0;
  bool violated = false;
};

MaxPrincipleReport max_principle_monitor(const DiagnosticsTrace& trace,
                                         std::int64_t transient_steps = 5,
                                         double relative_tolerance = 1e-2);

/// Largest rise of osc(udot) above its running minimum after the transient,
/// flagged above relative_tolerance * osc at the reference sample.
struct OscillationReport {
  double reference = 0.0;
  double value = 0.0;
  double tolerance = 0.0;
  bool violated = false;
};

OscillationReport oscillation_monitor(const DiagnosticsTrace& trace,
                                      std::int64_t transient_steps = 5,
                                      double relative_tolerance = 1e-2);

}  // namespace gcflow
