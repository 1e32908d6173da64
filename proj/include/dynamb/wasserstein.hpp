#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dynamb/linalg.hpp"
#include "dynamb/parallel.hpp"

namespace dynamb {

// Weighted atoms in R^d. Atoms are stored as columns. Duplicate atoms are
// kept as given so that index pairing survives.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Mat atoms, Vec weights);
  static DiscreteMeasure uniform(Mat atoms);
  static DiscreteMeasure uniform(const std::vector<Vec>& atoms);

  int dim() const { return static_cast<int>(atoms_.rows()); }
  int size() const { return static_cast<int>(atoms_.cols()); }
  const Mat& atoms() const { return atoms_; }
  const Vec& weights() const { return weights_; }
  bool is_uniform() const { return uniform_; }

 private:
  Mat atoms_;
  Vec weights_;
  bool uniform_ = false;
};

// c_ij = ||x_i - y_j||^p with the squared distance accumulated in long double.
Mat cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                Exec exec = Exec::Serial);

// Exact W_p with Euclidean ground norm: assignment for equal-size uniform
// measures, exact transportation solver otherwise.
double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double p, Exec exec = Exec::Serial);

// ((1/N) sum ||x_i - y_i||^p)^{1/p}: the cost of the index-matching coupling.
double wasserstein_upper_bound_paired(const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu, double p);

// Minimum over all N! permutations; uniform measures of equal size N <= 9.
double wasserstein_brute_force(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

struct OtSelftestCase {
  int N = 0;
  int d = 0;
  double p = 0.0;
  double solver = 0.0;
  double brute = 0.0;
};

// Random uniform pairs with N in [1, 6], d in [1, 4], p in {1, 2, 3}; Gaussian atoms.
std::vector<OtSelftestCase> ot_selftest(int cases, std::uint64_t seed);

// Atoms mapped by M, weights unchanged.
DiscreteMeasure pushforward(const DiscreteMeasure& mu, const Mat& M);

// All pairwise sums with product weights; fails above `max_atoms`.
DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& q,
                         long max_atoms = 1000000);

// (sum_i w_i ||x_i||^p)^{1/p}
double pth_moment_norm(const DiscreteMeasure& mu, double p);

// One atom per row, coordinates then weight, whitespace separated. A
// single header row is written and skipped on read.
void write_measure(std::ostream& os, const DiscreteMeasure& mu);
DiscreteMeasure read_measure(std::istream& is);

}  // namespace dynamb
