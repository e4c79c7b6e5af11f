#include <doctest.h>

#include <cmath>

#include "gcflow/elliptic.hpp"
#include "gcflow/error.hpp"
#include "support.hpp"

using namespace gcflow;

namespace {

FlowSetup paraboloid_setup(int n = 64) {
  auto t = testing::disk(0.5, n, 0.6);
  return make_flow_setup(SpeedLaw::constant_law(), ScalarField::sample(t, testing::paraboloid));
}

// disk R = 0.5, Euclidean graph law, u0 = 0.8 (x^2 + y^2)
FlowSetup disk_graph_setup(int n = 64) {
  auto t = testing::disk(0.5, n, 0.6);
  return make_flow_setup(SpeedLaw::euclidean_graph(2), ScalarField::sample(t, [](Point p) {
                           return 0.8 * (p.x * p.x + p.y * p.y);
                         }));
}

double sup_interior(const ScalarField& a, const ScalarField& b, double shift = 0.0) {
  double s = 0.0;
  for (std::size_t k : a.topology().interior_nodes) s = std::max(s, std::abs(a[k] - b[k] - shift));
  return s;
}

double interior_mean(const ScalarField& u) {
  double s = 0.0;
  for (std::size_t k : u.topology().interior_nodes) s += u[k];
  return s / static_cast<double>(u.topology().interior_nodes.size());
}

RelaxationOptions tight() {
  RelaxationOptions o;
  o.tol = 1e-10;
  return o;
}

}  // namespace

TEST_CASE("forced paraboloid relaxes to a fixed point") {
  auto s = paraboloid_setup();
  const RegularizedProblem p{0.5, 0.0, &s};
  CHECK(regularized_residual(p, s.u0) > 1e-3);
  const auto sol = solve_regularized(p, tight());
  CHECK(sol.residual_sup <= 1e-10);
  CHECK(regularized_residual(p, sol.u) == doctest::Approx(sol.residual_sup));
  CHECK(sol.steps > 0);
  CHECK(sup_interior(sol.u, s.u0) > 1e-4);
}

TEST_CASE("shift identity") {
  auto s = paraboloid_setup();
  for (double eps : {0.5, 0.1}) {
    const auto base = solve_regularized({eps, 0.0, &s}, tight());
    for (double v : {-1.0, 1.0}) {
      const auto shifted = solve_regularized({eps, v, &s}, tight(), &base.u);
      CHECK(sup_interior(shifted.u, base.u, -v / eps) <= 1e-9);
    }
  }

  // eps = 1: v = 1 moves the fixed point down by exactly 1
  const auto a = solve_regularized({1.0, 0.0, &s}, tight());
  const auto b = solve_regularized({1.0, 1.0, &s}, tight());
  CHECK(sup_interior(b.u, a.u, -1.0) <= 1e-9);

  // monotone in v, node by node
  const auto c = solve_regularized({1.0, 2.0, &s}, tight(), &b.u);
  for (std::size_t k : s.u0.topology().interior_nodes) {
    CHECK(a.u[k] > b.u[k]);
    CHECK(b.u[k] > c.u[k]);
  }
}

TEST_CASE("regularized problem preconditions") {
  auto s = paraboloid_setup(32);
  CHECK_THROWS_AS(solve_regularized({0.0, 0.0, &s}), Error);
  CHECK_THROWS_AS(solve_regularized({1.5, 0.0, &s}), Error);
  CHECK_THROWS_AS(solve_regularized({0.5, 0.0, nullptr}), Error);

  RelaxationOptions few = tight();
  few.max_steps = 3;
  try {
    solve_regularized({0.5, 0.0, &s}, few);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_convergence);
  }
}

TEST_CASE("speed_from_anchor") {
  auto s = paraboloid_setup(32);
  const auto& topo = s.u0.topology();
  const std::size_t anchor = default_anchor(topo);
  const Point a = topo.grid.position(anchor);
  for (std::size_t k : topo.interior_nodes) {
    const Point p = topo.grid.position(k);
    CHECK(std::hypot(p.x, p.y) >= std::hypot(a.x, a.y));
  }

  CHECK(speed_from_anchor(0.3, s.u0, s.u0, anchor) == 0.0);
  CHECK(speed_from_anchor(0.1, s.u0 + 2.0, s.u0, anchor) == doctest::Approx(0.2).epsilon(1e-14));

  std::size_t outside = 0;
  while (topo.labels[outside] == NodeLabel::interior) ++outside;
  try {
    speed_from_anchor(0.1, s.u0, s.u0, outside);
    FAIL("expected AnchorOutsideDomain");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::anchor_outside_domain);
  }
}

TEST_CASE("stationary paraboloid has zero speed") {
  auto s = paraboloid_setup();
  const auto sol = solve_regularized({1e-2, 0.0, &s}, tight());
  const double v = speed_from_anchor(1e-2, sol.u, s.u0, default_anchor(s.u0.topology()));
  CHECK(std::abs(v) <= 1e-2);

  const auto c = continue_speed(s, {0.2, 0.1, 0.05});
  REQUIRE(c.speeds.size() == 3);
  CHECK(c.extrapolated);
  REQUIRE(c.previous_extrapolant);
  CHECK(std::abs(c.extrapolated_speed) <= 1e-3);
  // v_eps = v + c eps: the extrapolant is the secant through the last two points
  CHECK(c.extrapolated_speed ==
        doctest::Approx(c.speeds[2] - 0.05 * (c.speeds[1] - c.speeds[2]) / 0.05).epsilon(1e-12));
}

TEST_CASE("single epsilon is reported without extrapolation") {
  auto s = paraboloid_setup(32);
  const auto c = continue_speed(s, {0.1});
  CHECK_FALSE(c.extrapolated);
  CHECK_FALSE(c.previous_extrapolant);
  CHECK(c.extrapolated_speed == c.speeds[0]);
}

TEST_CASE("continuation rejects bad epsilon lists") {
  auto s = paraboloid_setup(32);
  for (const auto& eps : {std::vector<double>{}, std::vector<double>{0.1, 0.2},
                          std::vector<double>{0.1, 0.1}, std::vector<double>{2.0, 0.1},
                          std::vector<double>{0.1, -0.05}}) {
    try {
      continue_speed(s, eps);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  }
}

TEST_CASE("warm start does not change the answer") {
  auto s = disk_graph_setup(32);
  ContinuationOptions warm;
  warm.relaxation = tight();
  ContinuationOptions cold = warm;
  cold.warm_start = false;
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const auto a = continue_speed(s, eps, warm);
  const auto b = continue_speed(s, eps, cold);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    // the speed is eps times a field value, so 10 tol on u gives eps 10 tol on v
    CHECK(std::abs(a.speeds[i] - b.speeds[i]) <= 10 * 1e-10);
  }
  CHECK(sup_interior(a.last_solution, b.last_solution) <= 10 * 1e-10 / 0.05);
  CHECK(a.total_steps < b.total_steps);
}

TEST_CASE("continued profile matches the flow translator") {
  // calibrated at 64x64: the two profiles differ by about 1.3e-4, the
  // remaining O(eps) bias of the smallest epsilon
  auto s = disk_graph_setup(64);
  ContinuationOptions opt;
  opt.relaxation.tol = 1e-9;
  const auto c = continue_speed(s, {0.2, 0.1, 0.05}, opt);

  FlowOptions fo;
  fo.t_end = 0.3;
  const auto r = run(s, fo);

  CHECK(std::abs(c.extrapolated_speed - r.translator.speed) <= 5e-2);
  const double m = interior_mean(c.last_solution);
  CHECK(sup_interior(c.last_solution, r.translator.profile, m) <= 5e-4);
}
