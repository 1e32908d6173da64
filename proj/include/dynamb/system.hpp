#pragma once

#include <optional>
#include <vector>

#include "dynamb/linalg.hpp"

namespace dynamb {

// x_{k+1} = A_k x_k + G_k w_k,  y_k = H_k x_k + v_k  on k in [0, horizon].
// A time-invariant system stores one triple and answers for every k >= 0.
class LTVSystem {
 public:
  static LTVSystem time_invariant(Mat A, Mat G, Mat H, int horizon);
  static LTVSystem time_varying(std::vector<Mat> A, std::vector<Mat> G,
                                std::vector<Mat> H);

  int d() const { return d_; }
  int q() const { return q_; }
  int r() const { return r_; }
  int horizon() const { return horizon_; }
  bool is_time_invariant() const { return ti_; }

  const Mat& A(int k) const { return A_[slot(k)]; }
  const Mat& G(int k) const { return G_[slot(k)]; }
  const Mat& H(int k) const { return H_[slot(k)]; }

  // Time-varying systems can only be shortened.
  LTVSystem with_horizon(int horizon) const;

 private:
  LTVSystem() = default;
  std::size_t slot(int k) const;
  void validate() const;

  std::vector<Mat> A_, G_, H_;
  int d_ = 0, q_ = 0, r_ = 0, horizon_ = 0;
  bool ti_ = false;
};

// Gain schedule K_k with F_k = A_k + K_k H_k. Constant when both the system
// and the gain are time-invariant.
class ObserverDesign {
 public:
  // A single gain is held constant over the whole horizon.
  static ObserverDesign from_gains(const LTVSystem& sys, std::vector<Mat> K);

  const Mat& K(int k) const { return K_[slot(k)]; }
  const Mat& F(int k) const { return F_[slot(k)]; }
  bool is_constant() const { return constant_; }
  int last_step() const { return last_; }

  std::optional<int> contraction_horizon() const { return s0_; }
  ObserverDesign with_contraction_horizon(int s0) const;

 private:
  ObserverDesign() = default;
  std::size_t slot(int k) const;

  std::vector<Mat> K_, F_;
  int last_ = 0;
  bool constant_ = false;
  std::optional<int> s0_;
};

// Phi(j,k) = A_{j-1}...A_k and Psi(j,k) = F_{j-1}...F_k for 0 <= k <= j <= horizon.
class TransitionProducts {
 public:
  TransitionProducts(const LTVSystem& sys, const ObserverDesign& obs,
                     int horizon);

  int horizon() const { return horizon_; }
  bool is_constant() const { return constant_; }
  const Mat& phi(int j, int k) const;
  const Mat& psi(int j, int k) const;

 private:
  std::size_t index(int j, int k) const;

  int horizon_;
  bool constant_;
  std::vector<Mat> phi_, psi_;
};

struct Realization {
  std::vector<Vec> states;   // x_0 .. x_horizon
  std::vector<Vec> outputs;  // y_0 .. y_{n-1}, n = min(v.size(), horizon + 1)
};

Realization simulate_realization(const LTVSystem& sys, const Vec& x0,
                                 const std::vector<Vec>& w,
                                 const std::vector<Vec>& v);

// Luenberger estimates xhat_0 = 0 .. xhat_horizon from outputs y_0 .. y_{horizon-1}.
std::vector<Vec> run_observer(const LTVSystem& sys, const ObserverDesign& obs,
                              const std::vector<Vec>& outputs);

struct FilterCovariances {
  Mat process;      // d x d, positive semidefinite
  Mat measurement;  // r x r, positive definite
};

// Throws ErrorKind::Detectability naming an unobservable eigenvalue with
// modulus >= 1.
void check_detectability(const Mat& A, const Mat& H, double rank_tol = 1e-8);

// Steady-state filter gain K = -A P H^T (H P H^T + R)^{-1} from the
// stabilizing Riccati solution.
ObserverDesign design_gain_time_invariant(const LTVSystem& sys,
                                          const FilterCovariances& cov);

// Gramian-based gain for a uniformly observable system with window t.
// Defined from k = t + 2 on and held constant before that.
ObserverDesign design_gain_uniformly_observable(const LTVSystem& sys, int t,
                                                double gramian_tol = 1e-6);

int default_contraction_cap(const LTVSystem& sys, const ObserverDesign& obs);

// Smallest s0 <= cap with ||Psi(k+s,k)|| <= 1/2 for k in [k_first, k_last]
// and every s in [s0, cap].
int contraction_horizon(const TransitionProducts& products, int k_first,
                        int k_last, int cap);

struct MatrixBoundCertificate {
  double G_star = 0.0;
  double K_star_lower = 0.0;
  double K_star_upper = 0.0;
  std::vector<double> Psi_star;  // indexed by s = 0 .. s_max
  std::optional<int> s0;  // empty when no contraction within s_max
  bool time_invariant = false;
};

// Norm bounds over k in [k_first, k_last] and s in [0, s_max]; s0 is
// certified over the same ranges.
MatrixBoundCertificate matrix_bound_certificate(
    const LTVSystem& sys, const ObserverDesign& obs,
    const TransitionProducts& products, int k_first, int k_last, int s_max);

}  // namespace dynamb
