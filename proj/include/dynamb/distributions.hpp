#pragma once

#include <cstdint>
#include <vector>

#include "dynamb/linalg.hpp"
#include "dynamb/rng.hpp"

namespace dynamb {

// Closed interval; lo == hi is a point mass.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// One coordinate: finite mixture of uniform intervals and points.
struct Marginal {
  std::vector<double> weights;
  std::vector<Interval> parts;

  static Marginal point(double x) { return {{1.0}, {{x, x}}}; }
  static Marginal uniform(double lo, double hi) { return {{1.0}, {{lo, hi}}}; }
};

// Finite mixture of products of independent marginals. Covers point masses,
// uniform boxes and interval products as special cases.
class CompactDistribution {
 public:
  static CompactDistribution point_mass(const Vec& x);
  static CompactDistribution uniform_box(const Vec& lo, const Vec& hi);
  static CompactDistribution product(std::vector<Marginal> coords);
  static CompactDistribution mixture(std::vector<double> weights,
                                     std::vector<CompactDistribution> parts);

  int dim() const { return dim_; }
  Vec lower() const { return lower_; }
  Vec upper() const { return upper_; }
  // Center of the bounding box of the support.
  Vec center() const { return 0.5 * (lower_ + upper_); }
  // Half the infinity-norm diameter of the support.
  double half_diameter() const;

  // Translate every atom by -offset.
  CompactDistribution shifted(const Vec& offset) const;

  Vec draw(Rng& rng) const;
  std::vector<Vec> sample(int count, std::uint64_t seed) const;

 private:
  using Component = std::vector<Marginal>;
  CompactDistribution() = default;
  void finish();

  std::vector<double> weights_;
  std::vector<Component> components_;
  int dim_ = 0;
  Vec lower_, upper_;
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sd = 1.0;  // zero encodes a point mass at `mean`
};

class GaussianMixture1D {
 public:
  explicit GaussianMixture1D(std::vector<GaussianComponent> components);

  const std::vector<GaussianComponent>& components() const { return comps_; }
  double draw(Rng& rng) const;

 private:
  std::vector<GaussianComponent> comps_;
};

struct NoiseNormBounds {
  double m_v = 0.0;  // lower bound on the L^p norm of each noise coordinate
  double M_v = 0.0;  // upper bound on the L^p norm
  double C_v = 0.0;  // upper bound on the psi_p norm
  double p = 2.0;

  // C_v / m_v with the convention 0 when C_v = 0.
  double ratio() const;
  void validate() const;
};

// Exact L^p norm. Closed form for p in {1, 2}, quadrature otherwise.
double lp_norm_gaussian_mixture(const GaussianMixture1D& gm, double p);

// max_i (sd_i sqrt(8/3) + |mean_i| / sqrt(ln 2)), an upper bound on the
// psi_2 norm.
double psi2_norm_gaussian_mixture(const GaussianMixture1D& gm);

// E[exp((|X|/t)^p)] by adaptive Gauss-Kronrod quadrature; +inf when the
// integral diverges.
double orlicz_expectation(const GaussianMixture1D& gm, double t, double p);

// True iff E[exp((|X|/t)^p)] <= 2 within absolute tolerance 1e-9.
bool verify_psi_norm_bound(const GaussianMixture1D& gm, double t, double p);

// The psi_p norm itself, found by bisection on orlicz_expectation.
double psi_norm_numeric(const GaussianMixture1D& gm, double p);

// m_v = M_v = L^p norm; C_v from the mixture bound for p = 2 and from the
// numeric psi_p norm otherwise.
NoiseNormBounds noise_bounds_from_mixture(const GaussianMixture1D& gm, double p);

}  // namespace dynamb
