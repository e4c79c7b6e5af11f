#include "gcflow/field.hpp"

#include <utility>

#include "gcflow/error.hpp"

namespace gcflow {

ScalarField::ScalarField(TopologyPtr topo) : topo_(std::move(topo)) {
  if (!topo_) throw Error(ErrorKind::precondition, "field needs a topology");
  values_.assign(topo_->grid.size(), placeholder());
}

ScalarField ScalarField::sample(TopologyPtr topo, const std::function<double(Point)>& fn) {
  ScalarField f(std::move(topo));
  const auto& g = f.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (f.topology().labels[k] != NodeLabel::exterior) f.values_[k] = fn(g.position(k));
  }
  return f;
}

ScalarField& ScalarField::operator+=(double c) {
  const auto& labels = topo_->labels;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (labels[k] != NodeLabel::exterior) values_[k] += c;
  }
  return *this;
}

double ScalarField::interior_mean() const {
  double s = 0.0;
  for (std::size_t k : topo_->interior_nodes) s += values_[k];
  return s / static_cast<double>(topo_->interior_nodes.size());
}

}  // namespace gcflow
