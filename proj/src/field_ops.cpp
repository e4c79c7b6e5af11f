#include "gcflow/field_ops.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "gcflow/error.hpp"

namespace gcflow {

SpeedLaw SpeedLaw::constant_law(double value) {
  if (!(value > 0.0)) throw Error(ErrorKind::config, "constant speed law needs f > 0");
  SpeedLaw law;
  law.kind = "constant";
  law.constant = value;
  return law;
}

SpeedLaw SpeedLaw::euclidean_graph(int dimension, std::function<double(Point)> log_weight) {
  SpeedLaw law = custom(std::move(log_weight), KernelKind::euclidean, (dimension + 2) / 2.0);
  law.kind = "euclidean_graph";
  return law;
}

SpeedLaw SpeedLaw::minkowski_graph(int dimension, std::function<double(Point)> log_weight) {
  SpeedLaw law = custom(std::move(log_weight), KernelKind::minkowski, (dimension + 2) / 2.0);
  law.kind = "minkowski_graph";
  return law;
}

SpeedLaw SpeedLaw::custom(std::function<double(Point)> log_weight, KernelKind kernel,
                          double exponent) {
  SpeedLaw law;
  law.kind = "custom";
  law.log_weight = std::move(log_weight);
  law.kernel = kernel;
  law.exponent = exponent;
  law.gradient_domain =
      kernel == KernelKind::minkowski ? GradientDomain::unit_ball : GradientDomain::plane;
  return law;
}

bool SpeedLaw::admits(Vec2 p) const {
  return gradient_domain == GradientDomain::plane || dot(p, p) < 1.0;
}

double SpeedLaw::log_f(Point x, Vec2 p) const {
  double r = std::log(constant);
  if (log_weight) r += log_weight(x);
  switch (kernel) {
    case KernelKind::none: break;
    case KernelKind::euclidean: r += exponent * std::log1p(dot(p, p)); break;
    case KernelKind::minkowski: r += exponent * std::log1p(-dot(p, p)); break;
  }
  return r;
}

Vec2 gradient_at(const ScalarField& u, std::size_t node) {
  const auto& g = u.grid();
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  return {(u[node + 1] - u[node - 1]) / (2.0 * g.hx()),
          (u[node + nx] - u[node - nx]) / (2.0 * g.hy())};
}

HessianSample hessian_at(const ScalarField& u, std::size_t node) {
  const auto& g = u.grid();
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  const double hx = g.hx();
  const double hy = g.hy();
  const double c = u[node];
  HessianSample s;
  s.uxx = (u[node + 1] - 2.0 * c + u[node - 1]) / (hx * hx);
  s.uyy = (u[node + nx] - 2.0 * c + u[node - nx]) / (hy * hy);
  s.uxy = (u[node + nx + 1] - u[node - nx + 1] - u[node + nx - 1] + u[node - nx - 1]) /
          (4.0 * hx * hy);
  s.det = s.uxx * s.uyy - s.uxy * s.uxy;
  return s;
}

double explicit_rate(const HessianSample& s, double hx, double hy) {
  return (s.uyy / s.det) / (hx * hx) + (s.uxx / s.det) / (hy * hy) +
         std::abs(s.uxy / s.det) / (hx * hy);
}

ScalarField rhs_field(const ScalarField& u, const SpeedLaw& law, double* max_rate) {
  ScalarField out(u.topology_ptr());
  const auto& g = u.grid();
  const double hx = g.hx();
  const double hy = g.hy();
  double rate = 0.0;
  for (std::size_t k : u.topology().interior_nodes) {
    const HessianSample s = hessian_at(u, k);
    if (!(s.det > 0.0 && s.uxx > 0.0)) throw ConvexityLost(k, s.det, s.uxx);
    const Vec2 p = gradient_at(u, k);
    if (!law.admits(p)) {
      std::ostringstream os;
      os << "gradient |Du| = " << norm(p) << " outside the admissible ball at node " << k;
      throw Error(ErrorKind::gradient_domain_violated, os.str());
    }
    out[k] = std::log(s.det) - law.log_f(g.position(k), p);
    if (max_rate) rate = std::max(rate, explicit_rate(s, hx, hy));
  }
  if (max_rate) *max_rate = rate;
  return out;
}

ConvexityReport convexity_check(const ScalarField& u) {
  ConvexityReport r;
  r.min_det = std::numeric_limits<double>::infinity();
  r.min_uxx = std::numeric_limits<double>::infinity();
  for (std::size_t k : u.topology().interior_nodes) {
    const HessianSample s = hessian_at(u, k);
    // strict comparisons keep the first (lowest index) minimiser; NaN counts
    // as a violation
    if (s.det < r.min_det || (std::isnan(s.det) && !std::isnan(r.min_det))) {
      r.min_det = s.det;
      r.argmin_det = k;
    }
    if (s.uxx < r.min_uxx || (std::isnan(s.uxx) && !std::isnan(r.min_uxx))) {
      r.min_uxx = s.uxx;
      r.argmin_uxx = k;
    }
  }
  return r;
}

}  // namespace gcflow
