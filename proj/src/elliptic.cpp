#include "gcflow/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gcflow/error.hpp"

namespace gcflow {

namespace {

void check_problem(const RegularizedProblem& p) {
  if (!p.setup) throw Error(ErrorKind::precondition, "regularized problem without a setup");
  if (!(p.epsilon > 0.0 && p.epsilon <= 1.0)) {
    throw Error(ErrorKind::config, "epsilon must lie in (0, 1]");
  }
}

// F(u) - v - eps*u on interior nodes, written into `out`.
double residual_from_rhs(const ScalarField& rhs, const ScalarField& u, double v, double eps,
                         ScalarField& out) {
  double sup = 0.0;
  for (std::size_t k : u.topology().interior_nodes) {
    out[k] = rhs[k] - v - eps * u[k];
    sup = std::max(sup, std::abs(out[k]));
  }
  return sup;
}

}  // namespace

double regularized_residual(const RegularizedProblem& p, const ScalarField& u) {
  check_problem(p);
  const ScalarField rhs = rhs_field(u, p.setup->law);
  ScalarField r(u.topology_ptr());
  return residual_from_rhs(rhs, u, p.v, p.epsilon, r);
}

RegularizedSolution solve_regularized(const RegularizedProblem& p,
                                      const RelaxationOptions& opt, const ScalarField* start) {
  check_problem(p);
  if (!(opt.sigma > 0.0 && opt.sigma <= 0.5)) {
    throw Error(ErrorKind::config, "dt safety factor must lie in (0, 0.5]");
  }
  const FlowSetup& setup = *p.setup;
  const double eps = p.epsilon;

  RegularizedSolution sol;
  sol.u = start ? *start : setup.u0;
  apply_boundary(sol.u, setup.increments);

  double rate = 0.0;
  ScalarField rhs = rhs_field(sol.u, setup.law, &rate);
  ScalarField residual(sol.u.topology_ptr());

  for (;;) {
    if (opt.project_mean) {
      // rhs is invariant under constant shifts, so this zeroes the mean residual
      sol.u += (rhs.interior_mean() - p.v) / eps - sol.u.interior_mean();
    }
    sol.residual_sup = residual_from_rhs(rhs, sol.u, p.v, eps, residual);
    if (sol.residual_sup <= opt.tol) return sol;
    if (sol.steps >= opt.max_steps) {
      std::ostringstream os;
      os << "relaxation stalled at residual " << sol.residual_sup << " after " << sol.steps
         << " steps (eps=" << eps << ", v=" << p.v << ")";
      throw Error(ErrorKind::non_convergence, os.str());
    }

    double dt = opt.sigma / (rate + eps);
    ScalarField next;
    for (int attempt = 0;; ++attempt) {
      next = sol.u;
      advance(next, residual, dt, setup.increments);
      try {
        rhs = rhs_field(next, setup.law, &rate);
        break;
      } catch (const ConvexityLost&) {
        if (attempt >= opt.max_halvings) throw;
        dt *= 0.5;
      }
    }
    sol.u = std::move(next);
    ++sol.steps;
  }
}

std::size_t default_anchor(const GridTopology& topo) {
  std::size_t best = topo.interior_nodes.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k : topo.interior_nodes) {
    const Point x = topo.grid.position(k);
    const double d = dot(x, x);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double speed_from_anchor(double epsilon, const ScalarField& u_eps0, const ScalarField& u0,
                         std::size_t anchor) {
  const auto& labels = u0.topology().labels;
  if (anchor >= labels.size() || labels[anchor] != NodeLabel::interior) {
    throw Error(ErrorKind::anchor_outside_domain, "anchor node is not an interior node");
  }
  return epsilon * (u_eps0[anchor] - u0[anchor]);
}

SpeedContinuation continue_speed(const FlowSetup& setup, const std::vector<double>& epsilons,
                                 const ContinuationOptions& opt) {
  if (epsilons.empty()) throw Error(ErrorKind::config, "epsilon list is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] <= 1.0)) {
      throw Error(ErrorKind::config, "every epsilon must lie in (0, 1]");
    }
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw Error(ErrorKind::config, "epsilons must be strictly decreasing");
    }
  }
  const std::size_t anchor = opt.anchor.value_or(default_anchor(setup.u0.topology()));

  SpeedContinuation out;
  out.epsilons = epsilons;
  for (double eps : epsilons) {
    const RegularizedProblem p{eps, 0.0, &setup};
    const bool warm = opt.warm_start && !out.speeds.empty();
    RegularizedSolution sol =
        solve_regularized(p, opt.relaxation, warm ? &out.last_solution : nullptr);
    out.total_steps += sol.steps;
    out.speeds.push_back(speed_from_anchor(eps, sol.u, setup.u0, anchor));
    out.last_solution = std::move(sol.u);
  }

  auto extrapolate = [&](std::size_t i) {
    const double e1 = epsilons[i - 1], e2 = epsilons[i];
    const double v1 = out.speeds[i - 1], v2 = out.speeds[i];
    return (e1 * v2 - e2 * v1) / (e1 - e2);
  };
  const std::size_t n = epsilons.size();
  if (n == 1) {
    out.extrapolated_speed = out.speeds.front();
  } else {
    out.extrapolated = true;
    out.extrapolated_speed = extrapolate(n - 1);
    if (n >= 3) out.previous_extrapolant = extrapolate(n - 2);
  }
  return out;
}

}  // namespace gcflow
