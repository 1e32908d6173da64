#include "dynamb/assignment.hpp"

#include <limits>

#include "dynamb/error.hpp"

namespace dynamb {

Assignment solve_assignment(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorKind::Dimension, "assignment needs a square matrix");
  if (!cost.allFinite()) throw Error(ErrorKind::Domain, "assignment costs must be finite");
  Assignment out;
  if (n == 0) return out;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based: column 0 is a virtual column holding the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  out.row_to_col.assign(n, -1);
  long double total = 0.0L;
  for (int j = 1; j <= n; ++j) {
    out.row_to_col[match[j] - 1] = j - 1;
    total += cost(match[j] - 1, j - 1);
  }
  out.cost = static_cast<double>(total);
  return out;
}

}  // namespace dynamb
