#include "dynamb/system.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

constexpr double kMinGainNorm = 1e-12;

std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

LTVSystem LTVSystem::time_invariant(Mat A, Mat G, Mat H, int horizon) {
  if (horizon < 0) throw Error(ErrorKind::Domain, "horizon must be >= 0");
  LTVSystem sys;
  sys.d_ = static_cast<int>(A.rows());
  sys.q_ = static_cast<int>(G.cols());
  sys.r_ = static_cast<int>(H.rows());
  sys.A_.push_back(std::move(A));
  sys.G_.push_back(std::move(G));
  sys.H_.push_back(std::move(H));
  sys.horizon_ = horizon;
  sys.ti_ = true;
  sys.validate();
  return sys;
}

LTVSystem LTVSystem::time_varying(std::vector<Mat> A, std::vector<Mat> G,
                                  std::vector<Mat> H) {
  if (A.empty() || A.size() != G.size() || A.size() != H.size()) {
    throw Error(ErrorKind::Dimension,
                "A, G, H schedules must be non-empty and equally long");
  }
  LTVSystem sys;
  sys.d_ = static_cast<int>(A[0].rows());
  sys.q_ = static_cast<int>(G[0].cols());
  sys.r_ = static_cast<int>(H[0].rows());
  sys.horizon_ = static_cast<int>(A.size()) - 1;
  sys.A_ = std::move(A);
  sys.G_ = std::move(G);
  sys.H_ = std::move(H);
  sys.validate();
  return sys;
}

void LTVSystem::validate() const {
  if (d_ <= 0 || r_ <= 0 || q_ < 0) {
    throw Error(ErrorKind::Dimension, "dimensions must satisfy d>0, r>0, q>=0");
  }
  for (std::size_t k = 0; k < A_.size(); ++k) {
    const long idx = static_cast<long>(k);
    if (A_[k].rows() != d_ || A_[k].cols() != d_) {
      throw Error(ErrorKind::Dimension, "A has shape " + shape(A_[k]), idx);
    }
    if (G_[k].rows() != d_ || G_[k].cols() != q_) {
      throw Error(ErrorKind::Dimension, "G has shape " + shape(G_[k]), idx);
    }
    if (H_[k].rows() != r_ || H_[k].cols() != d_) {
      throw Error(ErrorKind::Dimension, "H has shape " + shape(H_[k]), idx);
    }
    if (!A_[k].allFinite() || !G_[k].allFinite() || !H_[k].allFinite()) {
      throw Error(ErrorKind::Domain, "non-finite system matrix", idx);
    }
  }
}

std::size_t LTVSystem::slot(int k) const {
  if (k < 0) throw Error(ErrorKind::Domain, "negative time index", k);
  if (is_time_invariant()) return 0;
  if (k > horizon_) {
    throw Error(ErrorKind::Domain, "time index beyond system horizon", k);
  }
  return static_cast<std::size_t>(k);
}

LTVSystem LTVSystem::with_horizon(int horizon) const {
  if (horizon < 0) throw Error(ErrorKind::Domain, "horizon must be >= 0");
  LTVSystem out = *this;
  if (is_time_invariant()) {
    out.horizon_ = horizon;
    return out;
  }
  if (horizon > horizon_) {
    throw Error(ErrorKind::Domain,
                "cannot extend a time-varying system beyond its schedule",
                horizon);
  }
  out.A_.resize(static_cast<std::size_t>(horizon) + 1);
  out.G_.resize(static_cast<std::size_t>(horizon) + 1);
  out.H_.resize(static_cast<std::size_t>(horizon) + 1);
  out.horizon_ = horizon;
  return out;
}

ObserverDesign ObserverDesign::from_gains(const LTVSystem& sys,
                                          std::vector<Mat> K) {
  if (K.empty()) throw Error(ErrorKind::Dimension, "empty gain schedule");
  ObserverDesign obs;
  for (std::size_t k = 0; k < K.size(); ++k) {
    const long idx = static_cast<long>(k);
    if (K[k].rows() != sys.d() || K[k].cols() != sys.r()) {
      throw Error(ErrorKind::Dimension, "gain has shape " + shape(K[k]), idx);
    }
    if (spectral_norm(K[k]) < kMinGainNorm) {
      throw Error(ErrorKind::Domain, "observer gain must be nonzero", idx);
    }
  }
  if (K.size() == 1 && sys.is_time_invariant()) {
    obs.F_.push_back(sys.A(0) + K[0] * sys.H(0));
    obs.K_ = std::move(K);
    obs.last_ = std::numeric_limits<int>::max();
    obs.constant_ = true;
    return obs;
  }
  if (K.size() == 1) {
    K.assign(static_cast<std::size_t>(sys.horizon()) + 1, K[0]);
  }
  if (!sys.is_time_invariant() &&
      static_cast<int>(K.size()) > sys.horizon() + 1) {
    K.resize(static_cast<std::size_t>(sys.horizon()) + 1);
  }
  obs.last_ = static_cast<int>(K.size()) - 1;
  obs.F_.reserve(K.size());
  for (int k = 0; k <= obs.last_; ++k) {
    obs.F_.push_back(sys.A(k) + K[k] * sys.H(k));
  }
  obs.K_ = std::move(K);
  return obs;
}

std::size_t ObserverDesign::slot(int k) const {
  if (k < 0) throw Error(ErrorKind::Domain, "negative time index", k);
  if (is_constant()) return 0;
  if (k > last_) {
    throw Error(ErrorKind::Domain, "time index beyond gain schedule", k);
  }
  return static_cast<std::size_t>(k);
}

ObserverDesign ObserverDesign::with_contraction_horizon(int s0) const {
  if (s0 < 1) throw Error(ErrorKind::Domain, "contraction horizon must be >= 1");
  ObserverDesign out = *this;
  out.s0_ = s0;
  return out;
}

TransitionProducts::TransitionProducts(const LTVSystem& sys,
                                       const ObserverDesign& obs, int horizon)
    : horizon_(horizon),
      constant_(sys.is_time_invariant() && obs.is_constant()) {
  if (horizon < 0) throw Error(ErrorKind::Domain, "horizon must be >= 0");
  const int d = sys.d();
  const Mat eye = Mat::Identity(d, d);
  if (constant_) {
    phi_.reserve(static_cast<std::size_t>(horizon) + 1);
    psi_.reserve(static_cast<std::size_t>(horizon) + 1);
    phi_.push_back(eye);
    psi_.push_back(eye);
    for (int s = 1; s <= horizon; ++s) {
      phi_.push_back(sys.A(0) * phi_.back());
      psi_.push_back(obs.F(0) * psi_.back());
    }
    return;
  }
  const std::size_t n = static_cast<std::size_t>(horizon) + 1;
  phi_.resize(n * (n + 1) / 2);
  psi_.resize(n * (n + 1) / 2);
  for (int k = 0; k <= horizon; ++k) {
    Mat ph = eye;
    Mat ps = eye;
    for (int j = k; j <= horizon; ++j) {
      phi_[index(j, k)] = ph;
      psi_[index(j, k)] = ps;
      if (j < horizon) {
        ph = sys.A(j) * ph;
        ps = obs.F(j) * ps;
      }
    }
  }
}

std::size_t TransitionProducts::index(int j, int k) const {
  if (k < 0 || k > j || j > horizon_) {
    throw Error(ErrorKind::Domain,
                "transition product (" + std::to_string(j) + "," +
                    std::to_string(k) + ") outside [0, " +
                    std::to_string(horizon_) + "]");
  }
  if (constant_) return static_cast<std::size_t>(j - k);
  const auto jj = static_cast<std::size_t>(j);
  return jj * (jj + 1) / 2 + static_cast<std::size_t>(k);
}

const Mat& TransitionProducts::phi(int j, int k) const { return phi_[index(j, k)]; }
const Mat& TransitionProducts::psi(int j, int k) const { return psi_[index(j, k)]; }

Realization simulate_realization(const LTVSystem& sys, const Vec& x0,
                                 const std::vector<Vec>& w,
                                 const std::vector<Vec>& v) {
  const int ell = sys.horizon();
  if (x0.size() != sys.d()) {
    throw Error(ErrorKind::Dimension, "initial state has wrong dimension");
  }
  if (static_cast<int>(w.size()) < ell || static_cast<int>(v.size()) < ell) {
    throw Error(ErrorKind::Dimension, "noise sequences shorter than horizon");
  }
  Realization out;
  out.states.reserve(static_cast<std::size_t>(ell) + 1);
  out.states.push_back(x0);
  for (int k = 0; k < ell; ++k) {
    if (w[k].size() != sys.q()) {
      throw Error(ErrorKind::Dimension, "process noise has wrong dimension", k);
    }
    out.states.push_back(sys.A(k) * out.states.back() + sys.G(k) * w[k]);
  }
  const int n_out = std::min(static_cast<int>(v.size()), ell + 1);
  out.outputs.reserve(static_cast<std::size_t>(n_out));
  for (int k = 0; k < n_out; ++k) {
    if (v[k].size() != sys.r()) {
      throw Error(ErrorKind::Dimension, "measurement noise has wrong dimension",
                  k);
    }
    out.outputs.push_back(sys.H(k) * out.states[k] + v[k]);
  }
  return out;
}

std::vector<Vec> run_observer(const LTVSystem& sys, const ObserverDesign& obs,
                              const std::vector<Vec>& outputs) {
  const int ell = sys.horizon();
  if (static_cast<int>(outputs.size()) < ell) {
    throw Error(ErrorKind::Dimension, "fewer outputs than horizon");
  }
  std::vector<Vec> est;
  est.reserve(static_cast<std::size_t>(ell) + 1);
  est.push_back(Vec::Zero(sys.d()));
  for (int k = 0; k < ell; ++k) {
    if (outputs[k].size() != sys.r()) {
      throw Error(ErrorKind::Dimension, "output has wrong dimension", k);
    }
    const Vec& x = est.back();
    est.push_back(sys.A(k) * x + obs.K(k) * (sys.H(k) * x - outputs[k]));
  }
  return est;
}

void check_detectability(const Mat& A, const Mat& H, double rank_tol) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d || H.cols() != d) {
    throw Error(ErrorKind::Dimension, "detectability test shape mismatch");
  }
  using CMat = Eigen::MatrixXcd;
  Eigen::EigenSolver<Mat> es(A, false);
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0) continue;
    CMat pbh(d + H.rows(), d);
    pbh.topRows(d) = lam * CMat::Identity(d, d) - A.cast<std::complex<double>>();
    pbh.bottomRows(H.rows()) = H.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMat> svd(pbh);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    if (sv(sv.size() - 1) <= rank_tol * scale) {
      std::ostringstream msg;
      msg << "unobservable eigenvalue " << lam.real();
      if (lam.imag() != 0.0) msg << (lam.imag() > 0 ? "+" : "") << lam.imag() << "i";
      msg << " with modulus " << std::abs(lam) << " >= 1";
      throw Error(ErrorKind::Detectability, msg.str());
    }
  }
}

namespace {

// Stabilizing solution of P = A P A^T - A P H^T (H P H^T + R)^{-1} H P A^T + Q
// by the structure-preserving doubling iteration.
Mat solve_filter_riccati(const Mat& A, const Mat& H, const Mat& Q,
                         const Mat& R) {
  const Eigen::Index d = A.rows();
  const Mat eye = Mat::Identity(d, d);
  Mat Ak = A.transpose();
  Mat Gk = H.transpose() * R.llt().solve(H);
  Mat Hk = Q;
  for (int it = 0; it < 200; ++it) {
    const Eigen::PartialPivLU<Mat> W(eye + Gk * Hk);
    const Mat WA = W.solve(Ak);
    const Mat WG = W.solve(Gk);
    const Mat Hn = Hk + Ak.transpose() * Hk * WA;
    Gk = Gk + Ak * WG * Ak.transpose();
    Ak = Ak * WA;
    const double change = (Hn - Hk).norm();
    Hk = 0.5 * (Hn + Hn.transpose());
    if (!Hk.allFinite()) break;
    if (change <= 1e-14 * std::max(1.0, Hk.norm())) return Hk;
  }
  throw Error(ErrorKind::Solver, "Riccati doubling iteration did not converge");
}

}  // namespace

ObserverDesign design_gain_time_invariant(const LTVSystem& sys,
                                          const FilterCovariances& cov) {
  if (!sys.is_time_invariant()) {
    throw Error(ErrorKind::Domain, "steady-state gain needs a time-invariant system");
  }
  const Mat& A = sys.A(0);
  const Mat& H = sys.H(0);
  if (cov.process.rows() != sys.d() || cov.process.cols() != sys.d()) {
    throw Error(ErrorKind::Dimension, "process covariance must be d x d");
  }
  if (cov.measurement.rows() != sys.r() || cov.measurement.cols() != sys.r()) {
    throw Error(ErrorKind::Dimension, "measurement covariance must be r x r");
  }
  if (cov.measurement.llt().info() != Eigen::Success) {
    throw Error(ErrorKind::Domain, "measurement covariance must be positive definite");
  }
  check_detectability(A, H);
  const Mat P = solve_filter_riccati(A, H, cov.process, cov.measurement);
  const Mat S = H * P * H.transpose() + cov.measurement;
  const Mat K = -(A * P * H.transpose()) * S.inverse();
  const double rho = spectral_radius(A + K * H);
  if (!(rho < 1.0)) {
    throw Error(ErrorKind::Detectability,
                "filter gain does not stabilize the error dynamics (spectral "
                "radius " + std::to_string(rho) +
                "); the process covariance must excite every marginal mode");
  }
  if (spectral_norm(K) < kMinGainNorm) {
    throw Error(ErrorKind::Domain,
                "steady-state gain vanished; use a positive process covariance");
  }
  return ObserverDesign::from_gains(sys, {K});
}

ObserverDesign design_gain_uniformly_observable(const LTVSystem& sys, int t,
                                                double gramian_tol) {
  if (t < 0) throw Error(ErrorKind::Domain, "window length must be >= 0");
  const int ell = sys.horizon();
  const int first = t + 2;
  if (ell < first) {
    throw Error(ErrorKind::Domain,
                "horizon too short for the Gramian window; need horizon >= t+2");
  }
  const int d = sys.d();
  std::vector<Mat> K(static_cast<std::size_t>(ell) + 1);
  for (int k = first; k <= ell; ++k) {
    const int s = k - t - 1;
    Mat O = Mat::Zero(d, d);
    Mat ph = Mat::Identity(d, d);
    for (int i = s; i <= k; ++i) {
      const Mat hp = sys.H(i) * ph;
      O += hp.transpose() * hp;
      if (i < k) ph = sys.A(i) * ph;
    }
    // ph now equals Phi(k, s).
    Eigen::SelfAdjointEigenSolver<Mat> es(O);
    const double lmin = es.eigenvalues()(0);
    if (lmin < gramian_tol) {
      throw Error(ErrorKind::Gramian,
                  "observability Gramian smallest eigenvalue " +
                      std::to_string(lmin) + " below tolerance",
                  k);
    }
    K[k] = -sys.A(k) * ph * O.ldlt().solve(ph.transpose() * sys.H(k).transpose());
  }
  for (int k = 0; k < first; ++k) K[k] = K[first];
  return ObserverDesign::from_gains(sys, std::move(K));
}

int default_contraction_cap(const LTVSystem& sys, const ObserverDesign& obs) {
  double rho = 0.0;
  const int last = obs.is_constant() ? 0 : std::min(obs.last_step(), sys.horizon());
  for (int k = 0; k <= last; ++k) rho = std::max(rho, spectral_radius(obs.F(k)));
  int factor = 100;
  if (rho <= 0.0) {
    factor = 1;
  } else if (rho < 1.0) {
    factor = std::max(1, static_cast<int>(std::ceil(std::log(2.0) / -std::log(rho))));
  }
  return 10 * sys.d() * factor;
}

int contraction_horizon(const TransitionProducts& products, int k_first,
                        int k_last, int cap) {
  if (cap < 1) throw Error(ErrorKind::Domain, "contraction cap must be >= 1");
  if (k_first < 0 || k_last < k_first) {
    throw Error(ErrorKind::Domain, "invalid k range");
  }
  if (products.is_constant()) k_last = k_first;
  if (k_last + cap > products.horizon()) {
    throw Error(ErrorKind::Domain,
                "transition products too short for k range plus cap");
  }
  std::vector<char> ok(static_cast<std::size_t>(cap) + 1, 1);
  for (int s = 1; s <= cap; ++s) {
    for (int k = k_first; k <= k_last && ok[s]; ++k) {
      if (spectral_norm(products.psi(k + s, k)) > 0.5) ok[s] = 0;
    }
  }
  if (!ok[cap]) {
    throw Error(ErrorKind::NoContraction,
                "no contraction within cap " + std::to_string(cap));
  }
  int s0 = cap;
  while (s0 > 1 && ok[s0 - 1]) --s0;
  return s0;
}

MatrixBoundCertificate matrix_bound_certificate(
    const LTVSystem& sys, const ObserverDesign& obs,
    const TransitionProducts& products, int k_first, int k_last, int s_max) {
  if (k_first < 0 || k_last < k_first || s_max < 1) {
    throw Error(ErrorKind::Domain, "invalid certificate range");
  }
  MatrixBoundCertificate cert;
  cert.time_invariant = products.is_constant();
  cert.K_star_lower = std::numeric_limits<double>::infinity();
  for (int k = k_first; k <= k_last; ++k) {
    cert.G_star = std::max(cert.G_star, spectral_norm(sys.G(k)));
    const double kn = spectral_norm(obs.K(k));
    cert.K_star_lower = std::min(cert.K_star_lower, kn);
    cert.K_star_upper = std::max(cert.K_star_upper, kn);
  }
  const int k_hi = products.is_constant() ? k_first : k_last;
  if (k_hi + s_max > products.horizon()) {
    throw Error(ErrorKind::Domain,
                "transition products too short for certificate range");
  }
  cert.Psi_star.assign(static_cast<std::size_t>(s_max) + 1, 0.0);
  for (int s = 0; s <= s_max; ++s) {
    for (int k = k_first; k <= k_hi; ++k) {
      cert.Psi_star[s] = std::max(cert.Psi_star[s], spectral_norm(products.psi(k + s, k)));
    }
  }
  try {
    cert.s0 = contraction_horizon(products, k_first, k_last, s_max);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoContraction) throw;
  }
  return cert;
}

}  // namespace dynamb
