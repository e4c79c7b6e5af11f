#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gcflow/geometry.hpp"

namespace gcflow {

enum class DirectionMode { normal, oblique };

/// Strictly convex planar domain {level < 0} plus the direction field used by
/// the boundary condition (inner normal, or a user-supplied oblique field).
struct DomainSpec {
  std::function<double(Point)> level;
  std::function<Vec2(Point)> grad_level;
  DirectionMode mode = DirectionMode::normal;
  std::function<Vec2(Point)> beta;  // oblique mode only, normalized on use
  double obliqueness_floor = 0.5;

  /// q * (a x^2 + b y^2) - 1.
  static DomainSpec ellipse(double q, double a, double b);
  /// x^2 + y^2 - R^2.
  static DomainSpec disk(double radius);
  static DomainSpec polynomial(Polynomial2 level);

  DomainSpec with_oblique(std::function<Vec2(Point)> field, double floor = 0.5) const;
};

/// Uniform node grid. Nodes sit at x_min + i*hx, i = 0..nx-1 (likewise in y).
struct GridSpec {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
  int nx = 0;
  int ny = 0;

  double hx() const { return (x_max - x_min) / (nx - 1); }
  double hy() const { return (y_max - y_min) / (ny - 1); }
  double h_min() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx)); }
  Point position(int i, int j) const { return {x_min + i * hx(), y_min + j * hy()}; }
  Point position(std::size_t k) const { return position(col(k), row(k)); }

  /// Throws Error(config) unless nx, ny >= 8 and both extents are positive.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class NodeLabel : std::uint8_t { exterior, interior, boundary };

/// Bilinear interpolation stencil at the foot point of a boundary node.
struct CellWeights {
  std::array<std::size_t, 4> nodes{};
  std::array<double, 4> weights{};

  template <class Values>
  double interpolate(const Values& v) const {
    return weights[0] * v[nodes[0]] + weights[1] * v[nodes[1]] + weights[2] * v[nodes[2]] +
           weights[3] * v[nodes[3]];
  }
};

struct BoundaryStencil {
  std::size_t node = 0;
  Vec2 direction;
  double tau0 = 0.0;
  Point foot;
  CellWeights cell;
};

struct GridTopology {
  GridSpec grid;
  std::vector<NodeLabel> labels;
  std::vector<BoundaryStencil> boundary_stencils;
  std::vector<std::size_t> interior_nodes;  // ascending index order

  NodeLabel label(int i, int j) const { return labels[grid.index(i, j)]; }
  std::size_t count(NodeLabel which) const;
};

/// Unit direction used by the boundary update at x: -grad(level)/|grad(level)|
/// in normal mode, the normalized beta(x) in oblique mode.
Vec2 boundary_direction(const DomainSpec& domain, Point x);

/// Inner unit normal, regardless of mode.
Vec2 inner_normal(const DomainSpec& domain, Point x);

struct TauSearch {
  double tau0 = 0.0;
  Point foot;
  CellWeights cell;
};

/// Smallest tau in k*h_min/4 (k = 1..12) whose bilinear cell has four interior
/// corners. Returns nullopt when none qualifies. Throws Error(precondition)
/// if `direction` does not point into the domain at x0.
std::optional<TauSearch> find_tau0(const DomainSpec& domain, const GridSpec& grid,
                                   std::span<const NodeLabel> labels, Point x0, Vec2 direction);

/// Classify nodes and build one extrapolation stencil per boundary node.
GridTopology build_topology(const DomainSpec& domain, const GridSpec& grid);

}  // namespace gcflow
