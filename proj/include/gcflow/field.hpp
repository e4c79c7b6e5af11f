#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "gcflow/domain.hpp"

namespace gcflow {

using TopologyPtr = std::shared_ptr<const GridTopology>;

/// Node values on a fixed topology. Exterior nodes hold a quiet NaN that no
/// operator reads.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(TopologyPtr topo);

  /// Sample `fn` at interior and boundary nodes.
  static ScalarField sample(TopologyPtr topo, const std::function<double(Point)>& fn);

  const GridTopology& topology() const { return *topo_; }
  const TopologyPtr& topology_ptr() const { return topo_; }
  const GridSpec& grid() const { return topo_->grid; }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j) { return values_[topo_->grid.index(i, j)]; }
  double at(int i, int j) const { return values_[topo_->grid.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// Adds c at every interior and boundary node.
  ScalarField& operator+=(double c);
  friend ScalarField operator+(ScalarField f, double c) { return f += c; }

  /// Arithmetic mean over interior nodes.
  double interior_mean() const;

  static constexpr double placeholder() { return std::numeric_limits<double>::quiet_NaN(); }

 private:
  TopologyPtr topo_;
  std::vector<double> values_;
};

}  // namespace gcflow
