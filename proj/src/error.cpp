#include "gcflow/error.hpp"

#include <sstream>

namespace gcflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::precondition: return "PreconditionViolated";
    case ErrorKind::domain_outside_grid: return "DomainOutsideGrid";
    case ErrorKind::domain_too_thin: return "DomainTooThin";
    case ErrorKind::obliqueness_violated: return "ObliquenessViolated";
    case ErrorKind::degenerate_gradient: return "DegenerateGradient";
    case ErrorKind::convexity_lost: return "ConvexityLost";
    case ErrorKind::gradient_domain_violated: return "GradientDomainViolated";
    case ErrorKind::non_convergence: return "NonConvergence";
    case ErrorKind::anchor_outside_domain: return "AnchorOutsideDomain";
    case ErrorKind::domain_violation: return "DomainViolation";
    case ErrorKind::range_exceeded: return "RangeExceeded";
    case ErrorKind::total_unknown: return "TotalUnknown";
    case ErrorKind::io: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string convexity_message(std::size_t node, double det, double uxx) {
  std::ostringstream os;
  os.precision(17);
  os << "convexity lost at node " << node << " (det=" << det << ", uxx=" << uxx << ")";
  return os.str();
}
}  // namespace

ConvexityLost::ConvexityLost(std::size_t node, double det, double uxx)
    : Error(ErrorKind::convexity_lost, convexity_message(node, det, uxx)),
      node_(node),
      det_(det),
      uxx_(uxx) {}

}  // namespace gcflow
