#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dynamb/distributions.hpp"
#include "dynamb/system.hpp"
#include "dynamb/wasserstein.hpp"

namespace dynamb {

// s^2 on [0,1], s^p above 1.
double alpha_p(double s, double p);
double alpha_p_inverse(double u, double p);

// (1 - beta) = (1 - beta_nom)(1 - beta_ns).
struct ConfidenceSplit {
  double beta = 0.0;
  double beta_nom = 0.0;
  double beta_ns = 0.0;

  static ConfidenceSplit from_nominal(double beta, double beta_nom);
  // 1 - beta_nom = 1 - beta_ns = sqrt(1 - beta).
  static ConfidenceSplit equal(double beta);
  void validate() const;
};

// Mean-decay constant for measures on the unit cube, valid for p < d/2.
double explicit_mean_constant(int d, double p);

// Constants of the single-exponential tail bound
// P(W_p > eps) <= C exp(-c N eps^d). C can be far beyond double range, so
// it is carried as log C.
struct NominalConstants {
  double log_C = 0.0;
  double c = 0.0;

  static NominalConstants from_C(double C, double c) { return {std::log(C), c}; }
};

// log C = C_*^d / (2 sqrt(d)^d), c = 1 / (2^d sqrt(d)^d), for p < d/2.
NominalConstants single_exponential_constants(int d, double p);

// 2 rho (C_* N^{-1/d} + sqrt(d) (2 ln(1/beta))^{1/(2p)} N^{-1/(2p)}).
// Requires p < d/2.
double nominal_radius_explicit(long N, double beta_nom, double rho, int d, double p);

// 2 rho (ln(C beta^{-1}) / c)^{1/d} N^{-1/d}. Requires p < d/2.
double nominal_radius_single_exponential(long N, double beta_nom, double rho,
                                         int d, double p);

// Three-regime radius with caller-supplied constants; ln(C/beta) must be
// positive. The p = d/2 regime inverts h numerically.
double nominal_radius_generic(long N, double beta_nom, double rho, int d,
                              double p, const NominalConstants& k);

// h(x) = x^2 / ln(2 + 1/x)^2, strictly increasing on (0, inf).
double h_function(double x);
// Bisection on [1e-12, 1e12] to relative tolerance 1e-10.
double h_inverse(double u);

// Smallest dimension >= d with p < dim/2. Zero-padding a measure into that
// dimension leaves W_p and the infinity-norm support radius unchanged.
int embedding_dimension(int d, double p);

struct FrakConstants {
  double Mw = 0.0;
  double Mv = 0.0;
  double Cv = 0.0;
  double mv = 0.0;
  double R = 0.0;
  double p = 2.0;
  int ell = 0;

  // Cv / mv with the convention 0 when Cv = 0.
  double ratio() const;
};

// Noise constants at horizon ell from the error-propagation sums.
FrakConstants frak_constants(const LTVSystem& sys, const ObserverDesign& obs,
                             const TransitionProducts& products,
                             const NoiseNormBounds& bounds, double rho_xi0,
                             double rho_w, int ell);

// 2^{(p-1)/p} (Mw + Mv + Mv alpha_p^{-1}(R^2 ln(2/beta_ns) / (c' N))).
double noise_radius(const FrakConstants& fc, long N, double beta_ns,
                    double c_prime = 0.1);

// sqrt(d) ||Phi_ell|| rho_xi0 + sqrt(q) sum_k ||Phi_{ell,ell-k+1} G_{ell-k}|| rho_w
// (spectral norms).
double rho_xi_ell(const LTVSystem& sys, const TransitionProducts& products,
                  double rho_xi0, double rho_w, int ell);

// Same propagation with infinity-induced norms and no dimension factors.
// Never larger than rho_xi_ell, and exact for diagonal dynamics on boxes.
double rho_xi_ell_box(const LTVSystem& sys, const TransitionProducts& products,
                      double rho_xi0, double rho_w, int ell);

enum class SupportRule { Spectral, InfinityNorm };

enum class NominalRule { Explicit, SingleExponential, Generic };

struct RadiusOptions {
  NominalRule nominal = NominalRule::Explicit;
  SupportRule support = SupportRule::InfinityNorm;
  std::optional<NominalConstants> user_constants;  // required for Generic
  double c_prime = 0.1;
};

struct RadiusBreakdown {
  ConfidenceSplit split;
  double eps_nominal = 0.0;
  double eps_noise = 0.0;
  double psi_total = 0.0;
  double rho_xi_ell = 0.0;
  int nominal_dim = 0;  // dimension used by the nominal formula
  NominalRule nominal_rule = NominalRule::Explicit;
  FrakConstants frak;
  std::string constants_note;
};

struct NoiseModel {
  NoiseNormBounds bounds;
  double rho_xi0 = 0.0;
  double rho_w = 0.0;
};

// Nominal radius (with rho propagated to ell) plus noise radius. The
// explicit and single-exponential rules zero-pad to embedding_dimension
// when p >= d/2.
RadiusBreakdown total_radius(const LTVSystem& sys, const ObserverDesign& obs,
                             const TransitionProducts& products,
                             const NoiseModel& noise, int ell, long N,
                             const ConfidenceSplit& split, double p,
                             const RadiusOptions& opt = {});

// Stacked states over [ell1, ell2]: nominal dimension (ell2 - ell1 + 1) d,
// rho maximised over the window, noise constants summed over the window.
RadiusBreakdown horizon_radius(const LTVSystem& sys, const ObserverDesign& obs,
                               const TransitionProducts& products,
                               const NoiseModel& noise, int ell1, int ell2,
                               long N, const ConfidenceSplit& split, double p,
                               const RadiusOptions& opt = {});

// Minimises psi over beta_nom in (0, beta): 64-point log grid, then golden
// section around the best grid point.
ConfidenceSplit optimal_split(double beta,
                              const std::function<double(const ConfidenceSplit&)>& psi);

struct PointwiseStep {
  int ell = 0;
  DiscreteMeasure center;
  double radius = 0.0;
};

// Noise as it enters the state (G_k w_k). Unknown law: only a bound q_w on
// its p-th moment norm. Known law: one discrete measure per step ell1 ..
// ell2-1.
struct UnknownNoise {
  double q_w = 0.0;
};
struct KnownNoise {
  std::vector<DiscreteMeasure> laws;
  long max_atoms = 1000000;
};

std::vector<PointwiseStep> pointwise_propagation(const LTVSystem& sys,
                                                 const DiscreteMeasure& center,
                                                 double radius, int ell1, int ell2,
                                                 const UnknownNoise& noise);
std::vector<PointwiseStep> pointwise_propagation(const LTVSystem& sys,
                                                 const DiscreteMeasure& center,
                                                 double radius, int ell1, int ell2,
                                                 const KnownNoise& noise);

struct UniformNoiseBounds {
  double Mw = 0.0;
  double Mv = 0.0;
  double R = 0.0;
  int ell0 = 0;
  bool time_invariant_form = false;
};

// Horizon-free bounds on Mw, Mv and R valid for every ell >= s0, from the
// certificate's sup/inf norms. R includes the 1/ln 2 offset.
UniformNoiseBounds uniform_noise_bounds(const MatrixBoundCertificate& cert,
                                        const NoiseModel& noise, int d, int q,
                                        int r, double p);

// Sharper bounds for constant system and gain using ||F^k G|| and
// ||F^k K|| sums over k < s0.
UniformNoiseBounds uniform_noise_bounds_time_invariant(const LTVSystem& sys,
                                                       const ObserverDesign& obs,
                                                       int s0, const NoiseModel& noise,
                                                       double p);

}  // namespace dynamb
