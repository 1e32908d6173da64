#include "dynamb/distributions.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weights(const std::vector<double>& w, const char* what) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
      throw Error(ErrorKind::InfeasibleWeights,
                  std::string(what) + " weight must be finite and nonnegative",
                  static_cast<long>(i));
    }
    total += w[i];
  }
  if (w.empty() || std::abs(total - 1.0) > kWeightTol) {
    throw Error(ErrorKind::InfeasibleWeights,
                std::string(what) + " weights must sum to 1");
  }
}

std::size_t pick(const std::vector<double>& w, Rng& rng) {
  if (w.size() == 1) return 0;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return w.size() - 1;
}

}  // namespace

CompactDistribution CompactDistribution::point_mass(const Vec& x) {
  std::vector<Marginal> coords;
  for (Eigen::Index i = 0; i < x.size(); ++i) coords.push_back(Marginal::point(x(i)));
  return product(std::move(coords));
}

CompactDistribution CompactDistribution::uniform_box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size()) {
    throw Error(ErrorKind::Dimension, "box bounds differ in dimension");
  }
  std::vector<Marginal> coords;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    coords.push_back(Marginal::uniform(lo(i), hi(i)));
  }
  return product(std::move(coords));
}

CompactDistribution CompactDistribution::product(std::vector<Marginal> coords) {
  CompactDistribution out;
  out.weights_ = {1.0};
  out.components_.push_back(std::move(coords));
  out.finish();
  return out;
}

CompactDistribution CompactDistribution::mixture(
    std::vector<double> weights, std::vector<CompactDistribution> parts) {
  if (weights.size() != parts.size() || parts.empty()) {
    throw Error(ErrorKind::Dimension, "mixture needs one weight per part");
  }
  check_weights(weights, "mixture");
  CompactDistribution out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].dim() != parts[0].dim()) {
      throw Error(ErrorKind::Dimension, "mixture parts differ in dimension",
                  static_cast<long>(i));
    }
    for (std::size_t j = 0; j < parts[i].components_.size(); ++j) {
      out.weights_.push_back(weights[i] * parts[i].weights_[j]);
      out.components_.push_back(parts[i].components_[j]);
    }
  }
  out.finish();
  return out;
}

void CompactDistribution::finish() {
  check_weights(weights_, "component");
  dim_ = static_cast<int>(components_.front().size());
  if (dim_ == 0) throw Error(ErrorKind::Dimension, "zero-dimensional distribution");
  lower_ = Vec::Constant(dim_, kInf);
  upper_ = Vec::Constant(dim_, -kInf);
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const auto& comp = components_[c];
    if (static_cast<int>(comp.size()) != dim_) {
      throw Error(ErrorKind::Dimension, "component dimension mismatch",
                  static_cast<long>(c));
    }
    if (weights_[c] == 0.0) continue;
    for (int i = 0; i < dim_; ++i) {
      const Marginal& m = comp[i];
      if (m.parts.size() != m.weights.size() || m.parts.empty()) {
        throw Error(ErrorKind::Dimension, "marginal needs one weight per part", i);
      }
      check_weights(m.weights, "marginal");
      for (std::size_t j = 0; j < m.parts.size(); ++j) {
        const Interval& iv = m.parts[j];
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
          throw Error(ErrorKind::Domain, "interval must be finite with lo <= hi", i);
        }
        if (m.weights[j] == 0.0) continue;
        lower_(i) = std::min(lower_(i), iv.lo);
        upper_(i) = std::max(upper_(i), iv.hi);
      }
    }
  }
}

double CompactDistribution::half_diameter() const {
  return 0.5 * (upper_ - lower_).maxCoeff();
}

CompactDistribution CompactDistribution::shifted(const Vec& offset) const {
  if (offset.size() != dim_) {
    throw Error(ErrorKind::Dimension, "shift has wrong dimension");
  }
  CompactDistribution out = *this;
  for (auto& comp : out.components_) {
    for (int i = 0; i < dim_; ++i) {
      for (auto& iv : comp[i].parts) {
        iv.lo -= offset(i);
        iv.hi -= offset(i);
      }
    }
  }
  out.lower_ -= offset;
  out.upper_ -= offset;
  return out;
}

Vec CompactDistribution::draw(Rng& rng) const {
  const Component& comp = components_[pick(weights_, rng)];
  Vec x(dim_);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < dim_; ++i) {
    const Marginal& m = comp[i];
    const Interval& iv = m.parts[pick(m.weights, rng)];
    x(i) = iv.lo == iv.hi ? iv.lo : iv.lo + (iv.hi - iv.lo) * unit(rng);
  }
  return x;
}

std::vector<Vec> CompactDistribution::sample(int count, std::uint64_t seed) const {
  if (count < 1) throw Error(ErrorKind::Domain, "sample count must be >= 1");
  Rng rng = make_rng(seed);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(draw(rng));
  return out;
}

GaussianMixture1D::GaussianMixture1D(std::vector<GaussianComponent> components)
    : comps_(std::move(components)) {
  std::vector<double> w;
  for (std::size_t i = 0; i < comps_.size(); ++i) {
    const auto& c = comps_[i];
    if (!(c.sd >= 0.0) || !std::isfinite(c.sd) || !std::isfinite(c.mean)) {
      throw Error(ErrorKind::Domain, "component needs finite mean and sd >= 0",
                  static_cast<long>(i));
    }
    w.push_back(c.weight);
  }
  check_weights(w, "Gaussian mixture");
}

double GaussianMixture1D::draw(Rng& rng) const {
  std::vector<double> w;
  w.reserve(comps_.size());
  for (const auto& c : comps_) w.push_back(c.weight);
  const auto& c = comps_[pick(w, rng)];
  if (c.sd == 0.0) return c.mean;
  return std::normal_distribution<double>(c.mean, c.sd)(rng);
}

double NoiseNormBounds::ratio() const {
  if (C_v == 0.0) return 0.0;
  return C_v / m_v;
}

void NoiseNormBounds::validate() const {
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "noise exponent p must be >= 1");
  if (!(m_v >= 0.0) || !(M_v >= m_v) || !(C_v >= 0.0)) {
    throw Error(ErrorKind::Domain, "noise bounds need 0 <= m_v <= M_v and C_v >= 0");
  }
  if (C_v > 0.0 && m_v == 0.0) {
    throw Error(ErrorKind::Domain, "m_v must be positive when C_v > 0");
  }
}

namespace {

using boost::math::quadrature::gauss_kronrod;

struct Quad {
  double value = 0.0;
  double error = 0.0;
};

// Integral of exp(log_g(z)) phi(z) over the real line, split at `kink`.
// Exponents are combined before exponentiating. Each tail is truncated
// where the log-integrand has fallen 60 below its largest sampled value,
// which keeps slowly decaying integrands (t near the divergence threshold)
// accurate.
template <class G>
Quad gaussian_integral(G log_g, double kink) {
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi);
  auto log_f = [&](double z) { return log_g(z) - 0.5 * z * z + log_norm; };
  auto f = [&](double z) { return std::exp(log_f(z)); };
  double peak = log_f(kink);
  for (int j = 0; j < 40; ++j) {
    const double h = std::ldexp(1.0, j - 4);
    peak = std::max({peak, log_f(kink - h), log_f(kink + h)});
  }
  auto reach = [&](double dir) {
    double h = 1.0;
    while (h < 1e12 && !(log_f(kink + dir * h) < peak - 60.0 &&
                         log_f(kink + dir * 2.0 * h) < log_f(kink + dir * h))) {
      h *= 2.0;
    }
    return kink + dir * h;
  };
  const double lo = reach(-1.0), hi = reach(1.0);
  Quad q;
  double e1 = 0.0, e2 = 0.0;
  const double a = gauss_kronrod<double, 61>::integrate(f, lo, kink, 30, 1e-14, &e1);
  const double b = gauss_kronrod<double, 61>::integrate(f, kink, hi, 30, 1e-14, &e2);
  q.value = a + b;
  q.error = e1 + e2;
  return q;
}

double component_orlicz(const GaussianComponent& c, double t, double p) {
  if (c.sd == 0.0) return std::exp(std::pow(std::abs(c.mean) / t, p));
  if (p > 2.0) return kInf;
  if (p == 2.0 && t * t <= 2.0 * c.sd * c.sd) return kInf;
  auto g = [&](double z) { return std::pow(std::abs(c.mean + c.sd * z) / t, p); };
  const Quad q = gaussian_integral(g, -c.mean / c.sd);
  if (!std::isfinite(q.value)) return kInf;
  if (q.error > std::max(1e-10, 1e-10 * q.value)) {
    throw Error(ErrorKind::Quadrature,
                "Orlicz expectation did not converge (estimate " +
                    std::to_string(q.value) + ", error " + std::to_string(q.error) + ")");
  }
  return q.value;
}

double component_abs_moment(const GaussianComponent& c, double p) {
  if (c.sd == 0.0) return std::pow(std::abs(c.mean), p);
  if (p == 2.0) return c.mean * c.mean + c.sd * c.sd;
  if (p == 1.0) {
    const double r = c.mean / c.sd;
    return c.sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * r * r) +
           c.mean * std::erf(r / std::numbers::sqrt2);
  }
  auto g = [&](double z) { return p * std::log(std::abs(c.mean + c.sd * z)); };
  const Quad q = gaussian_integral(g, -c.mean / c.sd);
  if (!std::isfinite(q.value) || q.error > 1e-12 * std::max(1.0, q.value)) {
    throw Error(ErrorKind::Quadrature, "absolute moment did not converge");
  }
  return q.value;
}

}  // namespace

double lp_norm_gaussian_mixture(const GaussianMixture1D& gm, double p) {
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "p must be >= 1");
  double m = 0.0;
  for (const auto& c : gm.components()) m += c.weight * component_abs_moment(c, p);
  return std::pow(m, 1.0 / p);
}

double psi2_norm_gaussian_mixture(const GaussianMixture1D& gm) {
  const double a = std::sqrt(8.0 / 3.0);
  const double b = 1.0 / std::sqrt(std::numbers::ln2);
  double best = 0.0;
  for (const auto& c : gm.components()) {
    if (c.weight == 0.0) continue;
    best = std::max(best, c.sd * a + std::abs(c.mean) * b);
  }
  return best;
}

double orlicz_expectation(const GaussianMixture1D& gm, double t, double p) {
  if (!(t > 0.0)) throw Error(ErrorKind::Domain, "candidate t must be positive");
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "p must be >= 1");
  double total = 0.0;
  for (const auto& c : gm.components()) {
    if (c.weight == 0.0) continue;
    const double e = component_orlicz(c, t, p);
    if (!std::isfinite(e)) return kInf;
    total += c.weight * e;
  }
  return total;
}

bool verify_psi_norm_bound(const GaussianMixture1D& gm, double t, double p) {
  return orlicz_expectation(gm, t, p) <= 2.0 + 1e-9;
}

double psi_norm_numeric(const GaussianMixture1D& gm, double p) {
  double scale = 0.0;
  for (const auto& c : gm.components()) {
    scale = std::max(scale, std::abs(c.mean) + c.sd);
  }
  if (scale == 0.0) return 0.0;
  auto above = [&](double t) {
    try {
      return orlicz_expectation(gm, t, p) > 2.0;
    } catch (const Error&) {
      // Only near the divergence threshold, where the expectation is huge.
      return true;
    }
  };
  double hi = scale;
  while (above(hi)) hi *= 2.0;
  double lo = hi;
  while (!above(lo)) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? lo : hi) = mid;
  }
  return hi;
}

NoiseNormBounds noise_bounds_from_mixture(const GaussianMixture1D& gm, double p) {
  NoiseNormBounds b;
  b.p = p;
  b.m_v = lp_norm_gaussian_mixture(gm, p);
  b.M_v = b.m_v;
  b.C_v = p == 2.0 ? psi2_norm_gaussian_mixture(gm) : psi_norm_numeric(gm, p);
  if (b.m_v == 0.0) b.C_v = 0.0;
  return b;
}

}  // namespace dynamb
