#include "gcflow/geometry.hpp"

#include <utility>

#include "gcflow/error.hpp"

namespace gcflow {

namespace {
double ipow(double base, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}
}  // namespace

Polynomial2::Polynomial2(std::vector<Monomial> terms) : terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.px < 0 || t.py < 0) {
      throw Error(ErrorKind::config, "polynomial exponents must be nonnegative");
    }
  }
}

double Polynomial2::operator()(Point p) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.coeff * ipow(p.x, t.px) * ipow(p.y, t.py);
  return s;
}

Vec2 Polynomial2::gradient(Point p) const {
  Vec2 g;
  for (const auto& t : terms_) {
    if (t.px > 0) g.x += t.coeff * t.px * ipow(p.x, t.px - 1) * ipow(p.y, t.py);
    if (t.py > 0) g.y += t.coeff * t.py * ipow(p.x, t.px) * ipow(p.y, t.py - 1);
  }
  return g;
}

}  // namespace gcflow
