#include "gcflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "gcflow/error.hpp"

namespace gcflow {

namespace {

constexpr double kMinGradient = 1e-12;
// quarter-cell steps out to three cells of the coarser spacing
constexpr int kTauSteps = 12;

Vec2 normalized_or_throw(Vec2 v, Point x, const char* what) {
  const double n = norm(v);
  if (!(n > kMinGradient)) {
    std::ostringstream os;
    os << what << " degenerate at (" << x.x << ", " << x.y << ")";
    throw Error(ErrorKind::degenerate_gradient, os.str());
  }
  return (1.0 / n) * v;
}

}  // namespace

DomainSpec DomainSpec::ellipse(double q, double a, double b) {
  if (!(q > 0.0 && a > 0.0 && b > 0.0)) {
    throw Error(ErrorKind::config, "ellipse coefficients must be positive");
  }
  DomainSpec d;
  d.level = [q, a, b](Point p) { return q * (a * p.x * p.x + b * p.y * p.y) - 1.0; };
  d.grad_level = [q, a, b](Point p) { return Vec2{2.0 * q * a * p.x, 2.0 * q * b * p.y}; };
  return d;
}

DomainSpec DomainSpec::disk(double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::config, "disk radius must be positive");
  DomainSpec d;
  const double r2 = radius * radius;
  d.level = [r2](Point p) { return p.x * p.x + p.y * p.y - r2; };
  d.grad_level = [](Point p) { return Vec2{2.0 * p.x, 2.0 * p.y}; };
  return d;
}

DomainSpec DomainSpec::polynomial(Polynomial2 level) {
  DomainSpec d;
  d.level = [level](Point p) { return level(p); };
  d.grad_level = [level = std::move(level)](Point p) { return level.gradient(p); };
  return d;
}

DomainSpec DomainSpec::with_oblique(std::function<Vec2(Point)> field, double floor) const {
  DomainSpec d = *this;
  d.mode = DirectionMode::oblique;
  d.beta = std::move(field);
  d.obliqueness_floor = floor;
  return d;
}

double GridSpec::h_min() const { return std::min(hx(), hy()); }

void GridSpec::validate() const {
  if (nx < 8 || ny < 8) throw Error(ErrorKind::config, "grid needs nx >= 8 and ny >= 8");
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw Error(ErrorKind::config, "grid extents must be positive");
  }
}

std::size_t GridTopology::count(NodeLabel which) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), which));
}

Vec2 inner_normal(const DomainSpec& domain, Point x) {
  return -1.0 * normalized_or_throw(domain.grad_level(x), x, "level gradient");
}

Vec2 boundary_direction(const DomainSpec& domain, Point x) {
  if (domain.mode == DirectionMode::oblique) {
    if (!domain.beta) throw Error(ErrorKind::config, "oblique mode without a direction field");
    return normalized_or_throw(domain.beta(x), x, "oblique direction");
  }
  return inner_normal(domain, x);
}

std::optional<TauSearch> find_tau0(const DomainSpec& domain, const GridSpec& grid,
                                   std::span<const NodeLabel> labels, Point x0, Vec2 direction) {
  if (!(dot(domain.grad_level(x0), direction) < 0.0)) {
    throw Error(ErrorKind::precondition, "boundary direction does not point into the domain");
  }
  const double hx = grid.hx();
  const double hy = grid.hy();
  const double step = grid.h_min() / 4.0;
  const int steps = static_cast<int>(
      std::floor(kTauSteps * std::max(hx, hy) / grid.h_min() + 1e-9));
  for (int k = 1; k <= steps; ++k) {
    const double tau = k * step;
    const Point y = x0 + tau * direction;
    const double fx = (y.x - grid.x_min) / hx;
    const double fy = (y.y - grid.y_min) / hy;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    if (i0 < 0 || j0 < 0 || i0 + 1 >= grid.nx || j0 + 1 >= grid.ny) continue;
    const std::array<std::size_t, 4> corners{grid.index(i0, j0), grid.index(i0 + 1, j0),
                                             grid.index(i0, j0 + 1), grid.index(i0 + 1, j0 + 1)};
    const bool all_interior = std::all_of(corners.begin(), corners.end(), [&](std::size_t c) {
      return labels[c] == NodeLabel::interior;
    });
    if (!all_interior) continue;
    const double s = std::clamp(fx - i0, 0.0, 1.0);
    const double t = std::clamp(fy - j0, 0.0, 1.0);
    TauSearch out;
    out.tau0 = tau;
    out.foot = y;
    out.cell.nodes = corners;
    out.cell.weights = {(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t};
    return out;
  }
  return std::nullopt;
}

GridTopology build_topology(const DomainSpec& domain, const GridSpec& grid) {
  grid.validate();
  if (!domain.level || !domain.grad_level) {
    throw Error(ErrorKind::config, "domain needs a level function and its gradient");
  }
  GridTopology topo;
  topo.grid = grid;
  topo.labels.assign(grid.size(), NodeLabel::exterior);

  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (domain.level(grid.position(i, j)) < 0.0) {
        if (i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1) {
          throw Error(ErrorKind::domain_outside_grid,
                      "domain reaches the outer node ring of the grid");
        }
        topo.labels[grid.index(i, j)] = NodeLabel::interior;
        topo.interior_nodes.push_back(grid.index(i, j));
      }
    }
  }
  if (topo.interior_nodes.empty()) {
    throw Error(ErrorKind::precondition, "no grid node lies inside the domain");
  }

  // Exterior nodes touching an interior node (8-neighbourhood) feed the
  // nine-point stencils and receive extrapolated values.
  for (std::size_t k : topo.interior_nodes) {
    const int i = grid.col(k);
    const int j = grid.row(k);
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        auto& lab = topo.labels[grid.index(i + di, j + dj)];
        if (lab == NodeLabel::exterior) lab = NodeLabel::boundary;
      }
    }
  }

  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (topo.labels[k] != NodeLabel::boundary) continue;
    const Point x0 = grid.position(k);
    const Vec2 dir = boundary_direction(domain, x0);
    if (domain.mode == DirectionMode::oblique) {
      const double c = dot(dir, inner_normal(domain, x0));
      if (c < domain.obliqueness_floor) {
        std::ostringstream os;
        os << "<beta, nu> = " << c << " below floor " << domain.obliqueness_floor
           << " at node " << k;
        throw Error(ErrorKind::obliqueness_violated, os.str());
      }
    }
    const auto found = find_tau0(domain, grid, topo.labels, x0, dir);
    if (!found) {
      std::ostringstream os;
      os << "no interior interpolation cell within 3 cells of boundary node " << k << " ("
         << x0.x << ", " << x0.y << ")";
      throw Error(ErrorKind::domain_too_thin, os.str());
    }
    topo.boundary_stencils.push_back({k, dir, found->tau0, found->foot, found->cell});
  }
  return topo;
}

}  // namespace gcflow
