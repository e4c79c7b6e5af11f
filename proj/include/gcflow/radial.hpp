#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gcflow::radial {

enum class KernelVariant { euclidean, minkowski };

/// h(s) = (1 + s^2)^(-(n+2)/2) or (1 - s^2)^(-(n+2)/2) (Minkowski, s < 1).
struct RadialKernel {
  KernelVariant variant = KernelVariant::euclidean;
  int dimension = 2;

  static RadialKernel euclidean(int n = 2) { return {KernelVariant::euclidean, n}; }
  static RadialKernel minkowski(int n = 2) { return {KernelVariant::minkowski, n}; }

  double exponent() const { return (dimension + 2) / 2.0; }
  double operator()(double s) const;
  /// Largest admissible |p| (exclusive for Minkowski).
  double gradient_bound() const;
};

/// Caller-declared integral of g over R^n.
struct DeclaredTotal {
  enum class Kind { finite, unbounded, unknown };
  Kind kind = Kind::unknown;
  double value = 0.0;

  static DeclaredTotal finite(double v) { return {Kind::finite, v}; }
  static DeclaredTotal unbounded() { return {Kind::unbounded, 0.0}; }
  static DeclaredTotal unknown() { return {Kind::unknown, 0.0}; }
};

struct RadialWeight {
  std::function<double(double)> g;
  DeclaredTotal declared_total;
  std::string name = "custom";

  double operator()(double r) const { return g(r); }

  /// g == c.
  static RadialWeight constant(double c, int n = 2);
  /// a (1 + r^2)^(-k); integrable iff k > n/2.
  static RadialWeight inverse_power(double a, double k, int n = 2);
  /// a exp(-b r^2).
  static RadialWeight gaussian(double a, double b, int n = 2);
};

/// n * omega_n, the area of the unit sphere in R^n.
double sphere_area(int n);

/// Relative accuracy requested from every mass quadrature.
inline constexpr double kQuadratureTol = 1e-10;

/// H(rho) = n omega_n int_0^rho h(s) s^(n-1) ds. Throws Error(domain_violation)
/// for rho < 0 or, for Minkowski, rho >= 1.
double mass_H(const RadialKernel& kernel, double rho);
/// G(r) = n omega_n int_0^r g(s) s^(n-1) ds.
double mass_G(const RadialWeight& weight, double r, int n);
/// Integral of h over R^n (over the unit ball for Minkowski): +inf if divergent.
double total_H(const RadialKernel& kernel);

/// H^{-1}(mass) by safeguarded Newton on H, to 4 ulp in H or 1e-12 relative in rho. Throws
/// Error(range_exceeded) when mass >= total_H.
double inverse_H(const RadialKernel& kernel, double mass);

/// v(R, rho) = log(H(rho) / G(R)).
double speed(const RadialKernel& kernel, const RadialWeight& weight, double R, double rho);

/// Unique rho with H(rho) = G(R); nullopt when G(R) >= total_H.
std::optional<double> rho_for_zero_speed(const RadialKernel& kernel,
                                         const RadialWeight& weight, double R);

struct RadialProfile {
  std::vector<double> r;
  std::vector<double> uprime;
  std::vector<double> u;  // u(0) = 0, trapezoidal
  double v_used = 0.0;
  double R = 0.0;
};

/// u'(r) = H^{-1}(e^v G(r)) on a uniform grid of `samples` points on [0, R].
RadialProfile profile(const RadialKernel& kernel, const RadialWeight& weight, double R,
                      double v, int samples = 2048);
/// Same, with the speed fixed by the boundary slope rho: v = speed(R, rho).
RadialProfile profile_for_rho(const RadialKernel& kernel, const RadialWeight& weight, double R,
                              double rho, int samples = 2048);
/// Profile on explicit increasing radii starting at 0.
RadialProfile profile_on(const RadialKernel& kernel, const RadialWeight& weight,
                         std::vector<double> radii, double v);

/// sup |u'' (u'/r)^(n-1) h(u') - e^v g(r)| over the inner samples, u'' by
/// centred differences of u'.
double profile_residual(const RadialKernel& kernel, const RadialWeight& weight,
                        const RadialProfile& p);

enum class EntireClass { exists_bounded_gradient, exists_unbounded_gradient, no_entire_solution };

const char* to_string(EntireClass c);

struct Classification {
  EntireClass verdict = EntireClass::no_entire_solution;
  /// log(total_H / total_G) when both are finite.
  std::optional<double> v;
};

/// |v| below this counts as v = 0.
inline constexpr double kZeroSpeedBand = 1e-9;

/// Existence of an entire rotationally symmetric solution with zero speed.
/// Throws Error(total_unknown) when the weight's total is unknown.
Classification classify_entire(const RadialKernel& kernel, const RadialWeight& weight);

struct EntireProfiles {
  std::vector<RadialProfile> profiles;
  std::vector<double> rhos;    // rho_R per radius
  double nesting_gap = 0.0;    // max |difference| of u and u' on shared radii
  bool nested = false;
};

/// Zero-speed profiles on growing balls sharing one radial spacing
/// (R_min / (samples - 1)); checks they coincide on shared radii.
EntireProfiles entire_profile(const RadialKernel& kernel, const RadialWeight& weight,
                              const std::vector<double>& radii, int samples = 2048,
                              double nesting_tol = 10 * kQuadratureTol);

}  // namespace gcflow::radial
