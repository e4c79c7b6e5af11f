#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gcflow/flow.hpp"

namespace gcflow {

/// det D^2u = e^v f(x, Du) e^(eps u) with the boundary increments of u0.
struct RegularizedProblem {
  double epsilon = 0.1;
  double v = 0.0;
  const FlowSetup* setup = nullptr;  // law, u0 and its boundary increments
};

struct RelaxationOptions {
  double tol = 1e-10;
  double sigma = 0.4;
  std::int64_t max_steps = 5'000'000;
  int max_halvings = 8;
  /// Re-solve the constant mode exactly after every step. Without it the
  /// constant mode relaxes at rate eps only.
  bool project_mean = true;
};

struct RegularizedSolution {
  ScalarField u;
  double residual_sup = 0.0;
  std::int64_t steps = 0;
};

/// Pseudo-time relaxation of du/dtau = log det D^2u - log f - v - eps*u.
/// Starts from `start` when given, else from u0. Throws ConvexityLost or
/// Error(non_convergence).
RegularizedSolution solve_regularized(const RegularizedProblem& p,
                                      const RelaxationOptions& options = {},
                                      const ScalarField* start = nullptr);

/// Sup over interior nodes of |log det D^2u - log f - v - eps*u|.
double regularized_residual(const RegularizedProblem& p, const ScalarField& u);

/// Interior node nearest the origin (lowest index on ties).
std::size_t default_anchor(const GridTopology& topo);

/// v_eps = eps * (u_{eps,0}(anchor) - u0(anchor)). Throws
/// Error(anchor_outside_domain) when the anchor is not interior.
double speed_from_anchor(double epsilon, const ScalarField& u_eps0, const ScalarField& u0,
                         std::size_t anchor);

struct SpeedContinuation {
  std::vector<double> epsilons;
  std::vector<double> speeds;
  double extrapolated_speed = 0.0;
  bool extrapolated = false;  // false for a single epsilon
  /// Extrapolant from the previous pair, when there are three or more points.
  std::optional<double> previous_extrapolant;
  ScalarField last_solution;  // u_{eps_min,0}
  std::int64_t total_steps = 0;
};

struct ContinuationOptions {
  RelaxationOptions relaxation;
  bool warm_start = true;
  std::optional<std::size_t> anchor;
};

/// Solves (eps, v=0) for each eps, extracts v_eps at the anchor and
/// extrapolates linearly in eps to eps = 0 from the last two points.
SpeedContinuation continue_speed(const FlowSetup& setup, const std::vector<double>& epsilons,
                                 const ContinuationOptions& options = {});

}  // namespace gcflow
