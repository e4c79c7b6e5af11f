#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcflow {

enum class ErrorKind {
  config,
  precondition,
  domain_outside_grid,
  domain_too_thin,
  obliqueness_violated,
  degenerate_gradient,
  convexity_lost,
  gradient_domain_violated,
  non_convergence,
  anchor_outside_domain,
  domain_violation,
  range_exceeded,
  total_unknown,
  io,
};

const char* to_string(ErrorKind kind);

/// Base error for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an interior node has det D^2u <= 0 or u_xx <= 0.
class ConvexityLost : public Error {
 public:
  ConvexityLost(std::size_t node, double det, double uxx);
  std::size_t node() const noexcept { return node_; }
  double det() const noexcept { return det_; }
  double uxx() const noexcept { return uxx_; }

 private:
  std::size_t node_;
  double det_;
  double uxx_;
};

}  // namespace gcflow
