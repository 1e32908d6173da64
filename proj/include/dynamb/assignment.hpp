#pragma once

#include <vector>

#include "dynamb/linalg.hpp"

namespace dynamb {

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix (Hungarian method
// with row/column potentials, O(n^3)).
Assignment solve_assignment(const Mat& cost);

}  // namespace dynamb
