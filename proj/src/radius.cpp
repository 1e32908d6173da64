#include "dynamb/radius.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

void check_p(double p) {
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "p must be >= 1");
}

void check_nominal_args(long N, double beta, double rho, int d) {
  if (N < 1) throw Error(ErrorKind::Domain, "N must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "beta must lie in (0,1)");
  if (!(rho >= 0.0)) throw Error(ErrorKind::Domain, "rho must be >= 0");
  if (d < 1) throw Error(ErrorKind::Domain, "dimension must be >= 1");
}

void require_low_exponent(int d, double p) {
  check_p(p);
  if (!(p < 0.5 * d)) {
    throw Error(ErrorKind::Domain,
                "explicit constants need p < d/2; use nominal_radius_generic "
                "with supplied constants or zero-pad to embedding_dimension");
  }
}

double inf_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

void check_ell(const TransitionProducts& products, int ell) {
  if (ell < 0) throw Error(ErrorKind::Domain, "ell must be >= 0");
  if (ell > products.horizon()) {
    throw Error(ErrorKind::Domain, "transition products shorter than ell");
  }
}

double nominal_part(int d, double p, double rho, long N, double beta_nom,
                    const RadiusOptions& opt, int& used_dim) {
  switch (opt.nominal) {
    case NominalRule::Explicit:
      used_dim = embedding_dimension(d, p);
      return nominal_radius_explicit(N, beta_nom, rho, used_dim, p);
    case NominalRule::SingleExponential:
      used_dim = embedding_dimension(d, p);
      return nominal_radius_single_exponential(N, beta_nom, rho, used_dim, p);
    case NominalRule::Generic:
      if (!opt.user_constants) {
        throw Error(ErrorKind::Config, "generic nominal rule needs constants C and c");
      }
      used_dim = d;
      return nominal_radius_generic(N, beta_nom, rho, d, p, *opt.user_constants);
  }
  throw Error(ErrorKind::Domain, "unknown nominal rule");
}

const char* rule_note(NominalRule r) {
  switch (r) {
    case NominalRule::Explicit: return "explicit two-term constants";
    case NominalRule::SingleExponential: return "single-exponential constants";
    case NominalRule::Generic: return "user-supplied C, c";
  }
  return "";
}

}  // namespace

double alpha_p(double s, double p) {
  check_p(p);
  if (!(s >= 0.0)) throw Error(ErrorKind::Domain, "alpha_p needs s >= 0");
  return s <= 1.0 ? s * s : std::pow(s, p);
}

double alpha_p_inverse(double u, double p) {
  check_p(p);
  if (!(u >= 0.0)) throw Error(ErrorKind::Domain, "alpha_p inverse needs u >= 0");
  return u <= 1.0 ? std::sqrt(u) : std::pow(u, 1.0 / p);
}

ConfidenceSplit ConfidenceSplit::from_nominal(double beta, double beta_nom) {
  ConfidenceSplit s{beta, beta_nom, (beta - beta_nom) / (1.0 - beta_nom)};
  s.validate();
  return s;
}

ConfidenceSplit ConfidenceSplit::equal(double beta) {
  const double b = 1.0 - std::sqrt(1.0 - beta);
  return from_nominal(beta, b);
}

void ConfidenceSplit::validate() const {
  auto open01 = [](double x) { return x > 0.0 && x < 1.0; };
  if (!open01(beta) || !open01(beta_nom) || !open01(beta_ns)) {
    throw Error(ErrorKind::Domain, "confidence levels must lie in (0,1)");
  }
  if (std::abs((1.0 - beta) - (1.0 - beta_nom) * (1.0 - beta_ns)) > 1e-12) {
    throw Error(ErrorKind::Domain, "split violates (1-beta) = (1-beta_nom)(1-beta_ns)");
  }
}

double explicit_mean_constant(int d, double p) {
  require_low_exponent(d, p);
  const double s = 1.0 / (1.0 - std::pow(2.0, p - 0.5 * d)) + 1.0 / (1.0 - std::pow(2.0, -p));
  return std::sqrt(static_cast<double>(d)) * std::pow(2.0, (d - 2.0) / (2.0 * p)) *
         std::pow(s, 1.0 / p);
}

NominalConstants single_exponential_constants(int d, double p) {
  const double cs = explicit_mean_constant(d, p);
  const double sqd_d = std::pow(std::sqrt(static_cast<double>(d)), d);
  return {std::pow(cs, d) / (2.0 * sqd_d), 1.0 / (std::pow(2.0, d) * sqd_d)};
}

double nominal_radius_explicit(long N, double beta_nom, double rho, int d, double p) {
  check_nominal_args(N, beta_nom, rho, d);
  require_low_exponent(d, p);
  const double n = static_cast<double>(N);
  const double cs = explicit_mean_constant(d, p);
  return 2.0 * rho *
         (cs * std::pow(n, -1.0 / d) +
          std::sqrt(static_cast<double>(d)) *
              std::pow(2.0 * std::log(1.0 / beta_nom), 1.0 / (2.0 * p)) *
              std::pow(n, -1.0 / (2.0 * p)));
}

double nominal_radius_single_exponential(long N, double beta_nom, double rho,
                                         int d, double p) {
  check_nominal_args(N, beta_nom, rho, d);
  const NominalConstants k = single_exponential_constants(d, p);
  const double arg = (k.log_C - std::log(beta_nom)) / k.c;
  return 2.0 * rho * std::pow(arg, 1.0 / d) * std::pow(static_cast<double>(N), -1.0 / d);
}

double h_function(double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::Domain, "h needs x > 0");
  const double l = std::log(2.0 + 1.0 / x);
  return x * x / (l * l);
}

double h_inverse(double u) {
  if (!(u > 0.0)) throw Error(ErrorKind::Domain, "h inverse needs u > 0");
  double lo = 1e-12, hi = 1e12;
  if (u < h_function(lo) || u > h_function(hi)) {
    throw Error(ErrorKind::SearchBracket, "h inverse argument outside [h(1e-12), h(1e12)]");
  }
  // Bisection in log space: the bracket spans 24 decades.
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    (h_function(mid) < u ? lo : hi) = mid;
    if (hi <= lo * (1.0 + 1e-15)) break;
  }
  const double x = std::sqrt(lo * hi);
  if (std::abs(h_function(x) - u) > 1e-10 * u) {
    throw Error(ErrorKind::SearchBracket, "h inverse bisection did not converge");
  }
  return x;
}

double nominal_radius_generic(long N, double beta_nom, double rho, int d,
                              double p, const NominalConstants& k) {
  check_nominal_args(N, beta_nom, rho, d);
  check_p(p);
  if (!(k.c > 0.0)) throw Error(ErrorKind::Domain, "c must be positive");
  const double num = k.log_C - std::log(beta_nom);
  if (!(num > 0.0)) throw Error(ErrorKind::Domain, "ln(C/beta) must be positive");
  const double n = static_cast<double>(N);
  const double half_d = 0.5 * d;
  if (p > half_d) return std::pow(num / k.c, 1.0 / (2.0 * p)) * rho * std::pow(n, -1.0 / (2.0 * p));
  if (p == half_d) return std::pow(h_inverse(num / (k.c * n)), 1.0 / p) * rho;
  return std::pow(num / k.c, 1.0 / d) * rho * std::pow(n, -1.0 / d);
}

int embedding_dimension(int d, double p) {
  check_p(p);
  if (d < 1) throw Error(ErrorKind::Domain, "dimension must be >= 1");
  if (p < 0.5 * d) return d;
  return static_cast<int>(std::floor(2.0 * p)) + 1;
}

double FrakConstants::ratio() const { return Cv == 0.0 ? 0.0 : Cv / mv; }

FrakConstants frak_constants(const LTVSystem& sys, const ObserverDesign& obs,
                             const TransitionProducts& products,
                             const NoiseNormBounds& bounds, double rho_xi0,
                             double rho_w, int ell) {
  check_ell(products, ell);
  bounds.validate();
  if (!(rho_xi0 >= 0.0) || !(rho_w >= 0.0)) {
    throw Error(ErrorKind::Domain, "support radii must be >= 0");
  }
  const double p = bounds.p;
  const double d = sys.d(), q = sys.q(), r = sys.r();
  double sum_g = 0.0, sum_k = 0.0, sum_kp = 0.0;
  for (int k = 1; k <= ell; ++k) {
    const Mat& psi = products.psi(ell, ell - k + 1);
    sum_g += spectral_norm(psi * sys.G(ell - k));
    const double nk = spectral_norm(psi * obs.K(ell - k));
    sum_k += nk;
    sum_kp += std::pow(nk, p);
  }
  FrakConstants fc;
  fc.p = p;
  fc.ell = ell;
  fc.Mw = std::sqrt(d) * spectral_norm(products.psi(ell, 0)) * rho_xi0 + std::sqrt(q) * sum_g * rho_w;
  fc.Mv = bounds.M_v * r * sum_k;
  fc.Cv = bounds.C_v * r * sum_k;
  fc.mv = bounds.m_v * std::pow(r, 1.0 / p) * std::pow(sum_kp, 1.0 / p);
  if (fc.Cv > 0.0 && fc.mv == 0.0) {
    throw Error(ErrorKind::Domain, "noise lower bound vanishes while the psi_p bound does not");
  }
  fc.R = fc.ratio() + 1.0 / std::numbers::ln2;
  return fc;
}

double noise_radius(const FrakConstants& fc, long N, double beta_ns, double c_prime) {
  if (N < 1) throw Error(ErrorKind::Domain, "N must be >= 1");
  if (!(beta_ns > 0.0 && beta_ns < 1.0)) throw Error(ErrorKind::Domain, "beta_ns must lie in (0,1)");
  if (!(c_prime > 0.0)) throw Error(ErrorKind::Domain, "c' must be positive");
  const double p = fc.p;
  const double u = fc.R * fc.R / (c_prime * static_cast<double>(N)) * std::log(2.0 / beta_ns);
  return std::pow(2.0, (p - 1.0) / p) * (fc.Mw + fc.Mv + fc.Mv * alpha_p_inverse(u, p));
}

double rho_xi_ell(const LTVSystem& sys, const TransitionProducts& products,
                  double rho_xi0, double rho_w, int ell) {
  check_ell(products, ell);
  double sum = 0.0;
  for (int k = 1; k <= ell; ++k) sum += spectral_norm(products.phi(ell, ell - k + 1) * sys.G(ell - k));
  return std::sqrt(static_cast<double>(sys.d())) * spectral_norm(products.phi(ell, 0)) * rho_xi0 +
         std::sqrt(static_cast<double>(sys.q())) * sum * rho_w;
}

double rho_xi_ell_box(const LTVSystem& sys, const TransitionProducts& products,
                      double rho_xi0, double rho_w, int ell) {
  check_ell(products, ell);
  double sum = 0.0;
  for (int k = 1; k <= ell; ++k) sum += inf_norm(products.phi(ell, ell - k + 1) * sys.G(ell - k));
  return inf_norm(products.phi(ell, 0)) * rho_xi0 + sum * rho_w;
}

RadiusBreakdown total_radius(const LTVSystem& sys, const ObserverDesign& obs,
                             const TransitionProducts& products,
                             const NoiseModel& noise, int ell, long N,
                             const ConfidenceSplit& split, double p,
                             const RadiusOptions& opt) {
  split.validate();
  if (noise.bounds.p != p) throw Error(ErrorKind::Domain, "noise bounds computed for a different p");
  RadiusBreakdown out;
  out.split = split;
  out.nominal_rule = opt.nominal;
  out.rho_xi_ell = opt.support == SupportRule::Spectral
                       ? rho_xi_ell(sys, products, noise.rho_xi0, noise.rho_w, ell)
                       : rho_xi_ell_box(sys, products, noise.rho_xi0, noise.rho_w, ell);
  out.eps_nominal = nominal_part(sys.d(), p, out.rho_xi_ell, N, split.beta_nom, opt, out.nominal_dim);
  out.frak = frak_constants(sys, obs, products, noise.bounds, noise.rho_xi0, noise.rho_w, ell);
  out.eps_noise = noise_radius(out.frak, N, split.beta_ns, opt.c_prime);
  out.psi_total = out.eps_nominal + out.eps_noise;
  out.constants_note = rule_note(opt.nominal);
  if (out.nominal_dim != sys.d()) {
    out.constants_note += ", zero-padded to dimension " + std::to_string(out.nominal_dim);
  }
  return out;
}

RadiusBreakdown horizon_radius(const LTVSystem& sys, const ObserverDesign& obs,
                               const TransitionProducts& products,
                               const NoiseModel& noise, int ell1, int ell2,
                               long N, const ConfidenceSplit& split, double p,
                               const RadiusOptions& opt) {
  if (ell1 < 0 || ell1 > ell2) throw Error(ErrorKind::Domain, "need 0 <= ell1 <= ell2");
  split.validate();
  if (noise.bounds.p != p) throw Error(ErrorKind::Domain, "noise bounds computed for a different p");
  RadiusBreakdown out;
  out.split = split;
  out.nominal_rule = opt.nominal;
  FrakConstants sum;
  sum.p = p;
  sum.ell = ell2;
  for (int ell = ell1; ell <= ell2; ++ell) {
    const double rho = opt.support == SupportRule::Spectral
                           ? rho_xi_ell(sys, products, noise.rho_xi0, noise.rho_w, ell)
                           : rho_xi_ell_box(sys, products, noise.rho_xi0, noise.rho_w, ell);
    out.rho_xi_ell = std::max(out.rho_xi_ell, rho);
    const FrakConstants fc = frak_constants(sys, obs, products, noise.bounds, noise.rho_xi0, noise.rho_w, ell);
    sum.Mw += fc.Mw;
    sum.Mv += fc.Mv;
    sum.Cv += fc.Cv;
    sum.mv += fc.mv;
  }
  sum.R = sum.ratio() + 1.0 / std::numbers::ln2;
  out.frak = sum;
  const int stacked = (ell2 - ell1 + 1) * sys.d();
  out.eps_nominal = nominal_part(stacked, p, out.rho_xi_ell, N, split.beta_nom, opt, out.nominal_dim);
  out.eps_noise = noise_radius(out.frak, N, split.beta_ns, opt.c_prime);
  out.psi_total = out.eps_nominal + out.eps_noise;
  out.constants_note = rule_note(opt.nominal);
  if (out.nominal_dim != stacked) {
    out.constants_note += ", zero-padded to dimension " + std::to_string(out.nominal_dim);
  }
  return out;
}

ConfidenceSplit optimal_split(double beta,
                              const std::function<double(const ConfidenceSplit&)>& psi) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "beta must lie in (0,1)");
  // Search in t = log(beta_nom) over [log(beta) + log(1e-8), log(beta) - tiny].
  const double hi = std::log(beta) + std::log1p(-1e-9);
  const double lo = std::log(beta) + std::log(1e-8);
  auto value = [&](double t) {
    const ConfidenceSplit s = ConfidenceSplit::from_nominal(beta, std::exp(t));
    const double v = psi(s);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  constexpr int kGrid = 64;
  std::vector<double> ts(kGrid), vs(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    ts[i] = lo + (hi - lo) * i / (kGrid - 1);
    vs[i] = value(ts[i]);
    if (vs[i] < vs[best]) best = i;
  }
  double a = ts[std::max(best - 1, 0)], b = ts[std::min(best + 1, kGrid - 1)];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = value(x1), f2 = value(x2);
  for (int it = 0; it < 100 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = value(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = value(x2);
    }
  }
  double t_best = ts[best], v_best = vs[best];
  if (f1 < v_best) t_best = x1, v_best = f1;
  if (f2 < v_best) t_best = x2, v_best = f2;
  return ConfidenceSplit::from_nominal(beta, std::exp(t_best));
}

namespace {

void check_window(const LTVSystem& sys, const DiscreteMeasure& center,
                  double radius, int ell1, int ell2) {
  if (ell1 < 0 || ell1 > ell2) throw Error(ErrorKind::Domain, "need 0 <= ell1 <= ell2");
  if (!sys.is_time_invariant() && ell2 > sys.horizon()) {
    throw Error(ErrorKind::Domain, "window exceeds system horizon");
  }
  if (center.dim() != sys.d()) throw Error(ErrorKind::Dimension, "center dimension differs from d");
  if (!(radius >= 0.0)) throw Error(ErrorKind::Domain, "radius must be >= 0");
}

}  // namespace

std::vector<PointwiseStep> pointwise_propagation(const LTVSystem& sys,
                                                 const DiscreteMeasure& center,
                                                 double radius, int ell1, int ell2,
                                                 const UnknownNoise& noise) {
  check_window(sys, center, radius, ell1, ell2);
  if (!(noise.q_w >= 0.0)) throw Error(ErrorKind::Domain, "q_w must be >= 0");
  std::vector<PointwiseStep> out{{ell1, center, radius}};
  for (int ell = ell1 + 1; ell <= ell2; ++ell) {
    const Mat& A = sys.A(ell - 1);
    const PointwiseStep& prev = out.back();
    out.push_back({ell, pushforward(prev.center, A), spectral_norm(A) * prev.radius + noise.q_w});
  }
  return out;
}

std::vector<PointwiseStep> pointwise_propagation(const LTVSystem& sys,
                                                 const DiscreteMeasure& center,
                                                 double radius, int ell1, int ell2,
                                                 const KnownNoise& noise) {
  check_window(sys, center, radius, ell1, ell2);
  if (static_cast<int>(noise.laws.size()) < ell2 - ell1) {
    throw Error(ErrorKind::Dimension, "need one noise law per propagation step");
  }
  std::vector<PointwiseStep> out{{ell1, center, radius}};
  for (int ell = ell1 + 1; ell <= ell2; ++ell) {
    const Mat& A = sys.A(ell - 1);
    const DiscreteMeasure& law = noise.laws[static_cast<std::size_t>(ell - ell1 - 1)];
    if (law.dim() != sys.d()) {
      throw Error(ErrorKind::Dimension, "noise law dimension differs from d", ell - 1);
    }
    const PointwiseStep& prev = out.back();
    out.push_back({ell, convolve(pushforward(prev.center, A), law, noise.max_atoms),
                   spectral_norm(A) * prev.radius});
  }
  return out;
}

UniformNoiseBounds uniform_noise_bounds(const MatrixBoundCertificate& cert,
                                        const NoiseModel& noise, int d, int q,
                                        int r, double p) {
  if (!cert.s0) throw Error(ErrorKind::NoContraction, "certificate has no contraction horizon");
  noise.bounds.validate();
  const int ell0 = *cert.s0;
  if (static_cast<int>(cert.Psi_star.size()) < ell0) {
    throw Error(ErrorKind::Domain, "certificate does not cover s < s0");
  }
  double sum = 0.0;
  for (int j = 0; j < ell0; ++j) sum += cert.Psi_star[j];
  UniformNoiseBounds u;
  u.ell0 = ell0;
  u.Mw = 0.5 * std::sqrt(static_cast<double>(d)) * noise.rho_xi0 +
         3.0 * std::sqrt(static_cast<double>(q)) * sum * cert.G_star * noise.rho_w;
  u.Mv = 3.0 * noise.bounds.M_v * r * sum * cert.K_star_upper;
  u.R = 3.0 * noise.bounds.ratio() * std::pow(r, (p - 1.0) / p) * sum * cert.K_star_upper /
            cert.K_star_lower +
        1.0 / std::numbers::ln2;
  return u;
}

UniformNoiseBounds uniform_noise_bounds_time_invariant(const LTVSystem& sys,
                                                       const ObserverDesign& obs,
                                                       int s0, const NoiseModel& noise,
                                                       double p) {
  if (!sys.is_time_invariant() || !obs.is_constant()) {
    throw Error(ErrorKind::Domain, "time-invariant bounds need a constant system and gain");
  }
  if (s0 < 1) throw Error(ErrorKind::Domain, "s0 must be >= 1");
  noise.bounds.validate();
  const Mat& F = obs.F(0);
  Mat pw = Mat::Identity(sys.d(), sys.d());
  double sum_g = 0.0, sum_k = 0.0, sum_kp = 0.0;
  for (int k = 0; k < s0; ++k) {
    sum_g += spectral_norm(pw * sys.G(0));
    const double nk = spectral_norm(pw * obs.K(0));
    sum_k += nk;
    sum_kp += std::pow(nk, p);
    pw = F * pw;
  }
  const double r = sys.r();
  UniformNoiseBounds u;
  u.ell0 = s0;
  u.time_invariant_form = true;
  u.Mw = 0.5 * std::sqrt(static_cast<double>(sys.d())) * noise.rho_xi0 +
         2.0 * std::sqrt(static_cast<double>(sys.q())) * sum_g * noise.rho_w;
  u.Mv = 2.0 * noise.bounds.M_v * r * sum_k;
  u.R = 2.0 * noise.bounds.ratio() * std::pow(r, (p - 1.0) / p) * sum_k / std::pow(sum_kp, 1.0 / p) +
        1.0 / std::numbers::ln2;
  return u;
}

}  // namespace dynamb
