#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "gcflow/field.hpp"

namespace gcflow {

enum class GradientDomain { plane, unit_ball };
enum class KernelKind { none, euclidean, minkowski };

/// f(x, p) = g(x) / h(p) with h(p) = (1 +- |p|^2)^(-exponent), or a positive
/// constant. Only log f is ever needed.
struct SpeedLaw {
  std::string kind = "constant";
  double constant = 1.0;                        // multiplies g
  std::function<double(Point)> log_weight;      // log g; empty means g == 1
  KernelKind kernel = KernelKind::none;
  double exponent = 0.0;                        // (n+2)/2 for the graph laws
  GradientDomain gradient_domain = GradientDomain::plane;

  static SpeedLaw constant_law(double value = 1.0);
  static SpeedLaw euclidean_graph(int dimension, std::function<double(Point)> log_weight = {});
  static SpeedLaw minkowski_graph(int dimension, std::function<double(Point)> log_weight = {});
  static SpeedLaw custom(std::function<double(Point)> log_weight, KernelKind kernel,
                         double exponent);

  bool admits(Vec2 p) const;
  /// log f(x, p); caller checks admits(p) first.
  double log_f(Point x, Vec2 p) const;
};

struct HessianSample {
  double uxx = 0.0;
  double uyy = 0.0;
  double uxy = 0.0;
  double det = 0.0;
};

/// Central differences; node must be interior.
Vec2 gradient_at(const ScalarField& u, std::size_t node);

/// Three-point second differences and the four-corner cross difference.
HessianSample hessian_at(const ScalarField& u, std::size_t node);

/// u^11/hx^2 + u^22/hy^2 + |u^12|/(hx hy) for the inverse sampled Hessian.
double explicit_rate(const HessianSample& s, double hx, double hy);

/// log det D^2u - log f(x, Du) on interior nodes. Throws ConvexityLost or
/// Error(gradient_domain_violated). When max_rate is non-null it receives the
/// largest explicit_rate over interior nodes.
ScalarField rhs_field(const ScalarField& u, const SpeedLaw& law, double* max_rate = nullptr);

struct ConvexityReport {
  double min_det = 0.0;
  double min_uxx = 0.0;
  std::size_t argmin_det = 0;
  std::size_t argmin_uxx = 0;
  bool convex() const { return min_det > 0.0 && min_uxx > 0.0; }
};

ConvexityReport convexity_check(const ScalarField& u);

}  // namespace gcflow
