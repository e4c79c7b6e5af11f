#pragma once

#include <cmath>
#include <memory>

#include "gcflow/domain.hpp"
#include "gcflow/field.hpp"

namespace testing {

using namespace gcflow;

inline TopologyPtr make_topology(const DomainSpec& d, const GridSpec& g) {
  return std::make_shared<const GridTopology>(build_topology(d, g));
}

// 1.1 (x^2 + (2y)^2) < 1 on [-1,1] x [-0.5,0.5]
inline TopologyPtr ellipse_bowl(int nx = 100, int ny = 50) {
  return make_topology(DomainSpec::ellipse(1.1, 1.0, 4.0), {-1.0, 1.0, -0.5, 0.5, nx, ny});
}

inline TopologyPtr disk(double R, int n, double half_width) {
  return make_topology(DomainSpec::disk(R), {-half_width, half_width, -half_width, half_width, n, n});
}

inline double quartic_bowl(Point p) { return 1.5 * p.x * p.x + p.y * p.y - 0.1 * std::pow(p.y, 4); }
inline double paraboloid(Point p) { return 0.5 * (p.x * p.x + p.y * p.y); }

// Interior node closest to p.
inline std::size_t nearest_interior(const GridTopology& t, Point p) {
  std::size_t best = t.interior_nodes.front();
  double bd = 1e300;
  for (std::size_t k : t.interior_nodes) {
    const Point q = t.grid.position(k);
    const double d = std::hypot(q.x - p.x, q.y - p.y);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

}  // namespace testing
