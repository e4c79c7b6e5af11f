#pragma once

#include <cmath>
#include <vector>

namespace gcflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

using Point = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// One monomial c * x^px * y^py.
struct Monomial {
  double coeff = 0.0;
  int px = 0;
  int py = 0;
};

/// Bivariate polynomial with analytic gradient. Used for custom level
/// functions, oblique direction fields and initial values.
class Polynomial2 {
 public:
  Polynomial2() = default;
  explicit Polynomial2(std::vector<Monomial> terms);

  double operator()(Point p) const;
  Vec2 gradient(Point p) const;
  const std::vector<Monomial>& terms() const { return terms_; }

 private:
  std::vector<Monomial> terms_;
};

}  // namespace gcflow
