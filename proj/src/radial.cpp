#include "gcflow/radial.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "gcflow/error.hpp"

namespace gcflow::radial {

namespace {

constexpr double kInverseTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// int_a^b f(s, 1 - s) s^(n-1) ds, requested well below kQuadratureTol.
// tanh-sinh clusters nodes at the endpoints, and its complement argument
// gives 1 - s without cancellation where the Minkowski kernel blows up.
template <class F>
double radial_integral(F&& f, double a, double b, int n) {
  if (b == a) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  auto integrand = [&](double s, double sc) {
    const double one_minus_s = sc >= 0.0 ? (1.0 - b) + sc : (1.0 - a) + sc;
    return f(s, one_minus_s) * std::pow(s, n - 1);
  };
  return integrator.integrate(integrand, a, b, 1e-2 * kQuadratureTol);
}

double kernel_at(const RadialKernel& kernel, double s, double one_minus_s) {
  const double q =
      kernel.variant == KernelVariant::euclidean ? 1.0 + s * s : one_minus_s * (1.0 + s);
  return std::pow(q, -kernel.exponent());
}

void check_dimension(int n) {
  if (n < 1) throw Error(ErrorKind::config, "dimension must be >= 1");
}

}  // namespace

double inverse_H_below(const RadialKernel& kernel, double mass, double total, double lo = 0.0);

double RadialKernel::operator()(double s) const { return kernel_at(*this, s, 1.0 - s); }

double RadialKernel::gradient_bound() const {
  return variant == KernelVariant::euclidean ? kInf : 1.0;
}

RadialWeight RadialWeight::constant(double c, int n) {
  check_dimension(n);
  if (!(c > 0.0)) throw Error(ErrorKind::config, "weight must be positive");
  return {[c](double) { return c; }, DeclaredTotal::unbounded(), "constant"};
}

RadialWeight RadialWeight::inverse_power(double a, double k, int n) {
  check_dimension(n);
  if (!(a > 0.0)) throw Error(ErrorKind::config, "weight must be positive");
  // int_0^inf s^(n-1) (1+s^2)^(-k) ds = B(n/2, k - n/2) / 2
  const DeclaredTotal total =
      k > n / 2.0 ? DeclaredTotal::finite(a * sphere_area(n) * 0.5 * std::beta(n / 2.0, k - n / 2.0))
                  : DeclaredTotal::unbounded();
  return {[a, k](double r) { return a * std::pow(1.0 + r * r, -k); }, total, "inverse_power"};
}

RadialWeight RadialWeight::gaussian(double a, double b, int n) {
  check_dimension(n);
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::config, "gaussian weight needs a, b > 0");
  return {[a, b](double r) { return a * std::exp(-b * r * r); },
          DeclaredTotal::finite(a * std::pow(std::numbers::pi / b, n / 2.0)), "gaussian"};
}

double sphere_area(int n) {
  check_dimension(n);
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

double mass_H(const RadialKernel& kernel, double rho) {
  check_dimension(kernel.dimension);
  if (!(rho >= 0.0) || !(rho < kernel.gradient_bound())) {
    std::ostringstream os;
    os << "rho = " << rho << " outside the kernel's gradient domain";
    throw Error(ErrorKind::domain_violation, os.str());
  }
  return sphere_area(kernel.dimension) * radial_integral(
             [&](double s, double c) { return kernel_at(kernel, s, c); }, 0.0, rho,
             kernel.dimension);
}

double mass_G(const RadialWeight& weight, double r, int n) {
  check_dimension(n);
  if (!(r >= 0.0)) throw Error(ErrorKind::domain_violation, "radius must be nonnegative");
  return sphere_area(n) * radial_integral([&](double s, double) { return weight(s); }, 0.0, r, n);
}

double total_H(const RadialKernel& kernel) {
  check_dimension(kernel.dimension);
  if (kernel.variant == KernelVariant::minkowski) return kInf;
  boost::math::quadrature::exp_sinh<double> integrator;
  const int n = kernel.dimension;
  auto integrand = [&](double s) { return kernel(s) * std::pow(s, n - 1); };
  return sphere_area(n) * integrator.integrate(integrand, 1e-2 * kQuadratureTol);
}

double inverse_H(const RadialKernel& kernel, double mass) {
  return inverse_H_below(kernel, mass, total_H(kernel));
}

double inverse_H_below(const RadialKernel& kernel, double mass, double total, double lo) {
  if (!(mass >= 0.0)) throw Error(ErrorKind::domain_violation, "mass must be nonnegative");
  if (mass == 0.0) return 0.0;
  if (mass >= total) {
    std::ostringstream os;
    os << "mass " << mass << " is not below the kernel total " << total;
    throw Error(ErrorKind::range_exceeded, os.str());
  }
  const int n = kernel.dimension;
  const double area = sphere_area(n);
  // H is increasing; lo is a caller-known lower bound (the previous sample)
  const double H_lo = mass_H(kernel, lo);
  double hi = kernel.variant == KernelVariant::euclidean ? std::max(1.0, 2.0 * lo) : 1.0;
  if (kernel.variant == KernelVariant::euclidean) {
    while (mass_H(kernel, hi) < mass) hi *= 2.0;
  }
  // safeguarded Newton, dH/drho = area k(rho) rho^(n-1)
  double x = lo;
  double Hx = H_lo;
  double a = lo;
  double b = hi;
  for (int it = 0; it < 200; ++it) {
    const double dH = area * kernel(x) * std::pow(x, n - 1);
    double next = dH > 0.0 ? x + (mass - Hx) / dH : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double Hn = mass_H(kernel, next);
    if (Hn < mass) {
      a = next;
    } else {
      b = next;
    }
    const double step = std::abs(next - x);
    x = next;
    Hx = Hn;
    if (std::abs(Hn - mass) <= 4.0 * std::numeric_limits<double>::epsilon() * mass ||
        step <= kInverseTol * x || b - a <= kInverseTol * b) {
      break;
    }
  }
  return x;
}

double speed(const RadialKernel& kernel, const RadialWeight& weight, double R, double rho) {
  if (!(R > 0.0)) throw Error(ErrorKind::domain_violation, "R must be positive");
  if (!(rho > 0.0)) throw Error(ErrorKind::domain_violation, "rho must be positive");
  const double G = mass_G(weight, R, kernel.dimension);
  if (!(G > 0.0)) throw Error(ErrorKind::domain_violation, "weight mass G(R) must be positive");
  return std::log(mass_H(kernel, rho) / G);
}

std::optional<double> rho_for_zero_speed(const RadialKernel& kernel,
                                         const RadialWeight& weight, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::domain_violation, "R must be positive");
  const double G = mass_G(weight, R, kernel.dimension);
  const double total = total_H(kernel);
  // quadrature noise must not turn G(R) == total into a huge spurious root
  if (G >= total * (1.0 - kQuadratureTol)) return std::nullopt;
  return inverse_H_below(kernel, G, total);
}

RadialProfile profile_on(const RadialKernel& kernel, const RadialWeight& weight,
                         std::vector<double> radii, double v) {
  if (radii.size() < 2 || radii.front() != 0.0) {
    throw Error(ErrorKind::precondition, "profile radii must start at 0 with >= 2 samples");
  }
  const int n = kernel.dimension;
  const double scale = std::exp(v);
  const double total = total_H(kernel);
  const double R = radii.back();
  if (!(scale * mass_G(weight, R, n) < total)) {
    throw Error(ErrorKind::range_exceeded, "e^v G(R) reaches the kernel total");
  }
  RadialProfile p;
  p.v_used = v;
  p.R = R;
  p.r = std::move(radii);
  p.uprime.resize(p.r.size());
  p.u.resize(p.r.size());
  // G accumulated interval by interval keeps the cost linear in the samples
  double G = 0.0;
  p.uprime[0] = 0.0;
  p.u[0] = 0.0;
  for (std::size_t k = 1; k < p.r.size(); ++k) {
    if (!(p.r[k] > p.r[k - 1])) throw Error(ErrorKind::precondition, "radii must increase");
    G += sphere_area(n) * boost::math::quadrature::gauss<double, 20>::integrate(
                              [&](double s) { return weight(s) * std::pow(s, n - 1); },
                              p.r[k - 1], p.r[k]);
    p.uprime[k] = inverse_H_below(kernel, scale * G, total, p.uprime[k - 1]);
    p.u[k] = p.u[k - 1] + 0.5 * (p.r[k] - p.r[k - 1]) * (p.uprime[k] + p.uprime[k - 1]);
  }
  return p;
}

RadialProfile profile(const RadialKernel& kernel, const RadialWeight& weight, double R,
                      double v, int samples) {
  if (!(R > 0.0)) throw Error(ErrorKind::domain_violation, "R must be positive");
  if (samples < 3) throw Error(ErrorKind::config, "profile needs >= 3 samples");
  if (!std::isfinite(v)) throw Error(ErrorKind::domain_violation, "speed must be finite");
  std::vector<double> radii(static_cast<std::size_t>(samples));
  const double h = R / (samples - 1);
  for (int k = 0; k < samples; ++k) radii[static_cast<std::size_t>(k)] = k * h;
  radii.back() = R;
  return profile_on(kernel, weight, std::move(radii), v);
}

RadialProfile profile_for_rho(const RadialKernel& kernel, const RadialWeight& weight, double R,
                              double rho, int samples) {
  return profile(kernel, weight, R, speed(kernel, weight, R, rho), samples);
}

double profile_residual(const RadialKernel& kernel, const RadialWeight& weight,
                        const RadialProfile& p) {
  const int n = kernel.dimension;
  const double scale = std::exp(p.v_used);
  double sup = 0.0;
  for (std::size_t k = 1; k + 1 < p.r.size(); ++k) {
    const double upp = (p.uprime[k + 1] - p.uprime[k - 1]) / (p.r[k + 1] - p.r[k - 1]);
    const double det = upp * std::pow(p.uprime[k] / p.r[k], n - 1);
    sup = std::max(sup, std::abs(det * kernel(p.uprime[k]) - scale * weight(p.r[k])));
  }
  return sup;
}

const char* to_string(EntireClass c) {
  switch (c) {
    case EntireClass::exists_bounded_gradient: return "exists_bounded_gradient";
    case EntireClass::exists_unbounded_gradient: return "exists_unbounded_gradient";
    case EntireClass::no_entire_solution: return "no_entire_solution";
  }
  return "unknown";
}

Classification classify_entire(const RadialKernel& kernel, const RadialWeight& weight) {
  const auto& total = weight.declared_total;
  if (total.kind == DeclaredTotal::Kind::unknown) {
    throw Error(ErrorKind::total_unknown, "weight integrability must be declared");
  }
  const bool g_finite = total.kind == DeclaredTotal::Kind::finite;
  Classification c;
  if (kernel.variant == KernelVariant::minkowski) {
    c.verdict = g_finite ? EntireClass::exists_bounded_gradient
                         : EntireClass::exists_unbounded_gradient;
    return c;
  }
  if (!g_finite) {
    // the Euclidean kernel is always integrable
    c.verdict = EntireClass::no_entire_solution;
    return c;
  }
  const double v = std::log(total_H(kernel) / total.value);
  c.v = v;
  if (std::abs(v) <= kZeroSpeedBand) {
    c.verdict = EntireClass::exists_unbounded_gradient;
  } else {
    c.verdict = v > 0.0 ? EntireClass::exists_bounded_gradient : EntireClass::no_entire_solution;
  }
  return c;
}

EntireProfiles entire_profile(const RadialKernel& kernel, const RadialWeight& weight,
                              const std::vector<double>& radii, int samples,
                              double nesting_tol) {
  if (radii.empty()) throw Error(ErrorKind::config, "radius list is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw Error(ErrorKind::config, "radii must be positive and increasing");
    }
  }
  if (samples < 3) throw Error(ErrorKind::config, "profile needs >= 3 samples");
  if (weight.declared_total.kind != DeclaredTotal::Kind::unknown &&
      classify_entire(kernel, weight).verdict == EntireClass::no_entire_solution) {
    throw Error(ErrorKind::precondition, "no entire solution exists for this weight");
  }

  EntireProfiles out;
  const double h = radii.front() / (samples - 1);
  for (double R : radii) {
    const auto rho = rho_for_zero_speed(kernel, weight, R);
    if (!rho) throw Error(ErrorKind::range_exceeded, "no zero-speed slope for this radius");
    out.rhos.push_back(*rho);
    std::vector<double> grid;
    for (long k = 0;; ++k) {
      const double r = static_cast<double>(k) * h;
      if (r >= R * (1.0 - 1e-12)) break;
      grid.push_back(r);
    }
    grid.push_back(R);
    out.profiles.push_back(profile_on(kernel, weight, std::move(grid), 0.0));
  }

  for (std::size_t a = 0; a + 1 < out.profiles.size(); ++a) {
    const auto& small = out.profiles[a];
    for (std::size_t b = a + 1; b < out.profiles.size(); ++b) {
      const auto& big = out.profiles[b];
      const std::size_t m = std::min(small.r.size(), big.r.size());
      for (std::size_t k = 0; k < m; ++k) {
        if (std::abs(small.r[k] - big.r[k]) > 1e-12 * std::max(1.0, big.r[k])) continue;
        out.nesting_gap = std::max({out.nesting_gap, std::abs(small.u[k] - big.u[k]),
                                    std::abs(small.uprime[k] - big.uprime[k])});
      }
    }
  }
  out.nested = out.nesting_gap <= nesting_tol;
  return out;
}

}  // namespace gcflow::radial
