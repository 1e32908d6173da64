#pragma once

#include <vector>

#include "dynamb/linalg.hpp"

namespace dynamb {

struct TransportFlow {
  int source = 0;
  int sink = 0;
  double mass = 0.0;
};

struct TransportPlan {
  double cost = 0.0;
  std::vector<TransportFlow> flows;  // positive entries only
  long pivots = 0;  // simplex pivots or shortest-path augmentations
};

inline constexpr long kFewSourcesLimit = 64;

// Balanced transportation problem min sum c_ij x_ij subject to row sums
// `supply` and column sums `demand`, solved exactly. When one side has at most
// kFewSourcesLimit points and the other is at least four times larger, the
// successive-shortest-path solver runs; otherwise the primal network simplex
// on a strongly feasible spanning tree (no cycling).
TransportPlan solve_transport(const Vec& supply, const Vec& demand,
                              const Mat& cost);

// The two engines, exposed for cross-checking. Inputs are not validated and
// must already balance.
TransportPlan solve_transport_simplex(const Vec& supply, const Vec& demand, const Mat& cost);
TransportPlan solve_transport_few_sources(const Vec& supply, const Vec& demand, const Mat& cost);

}  // namespace dynamb
