#include "dynamb/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dynamb/assignment.hpp"
#include "dynamb/error.hpp"
#include "dynamb/rng.hpp"
#include "dynamb/transport.hpp"

namespace dynamb {

namespace {

constexpr double kWeightTol = 1e-12;

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorKind::Domain, "p must be >= 1");
}

void check_same_dim(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::Dimension, "measures live in different dimensions");
  }
}

double powered_distance(const Mat& X, Eigen::Index i, const Mat& Y,
                        Eigen::Index j, double p) {
  long double sq = 0.0L;
  for (Eigen::Index k = 0; k < X.rows(); ++k) {
    const long double diff = static_cast<long double>(X(k, i)) - Y(k, j);
    sq += diff * diff;
  }
  if (p == 2.0) return static_cast<double>(sq);
  return static_cast<double>(std::pow(sq, static_cast<long double>(p) / 2.0L));
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(Mat atoms, Vec weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.cols() == 0 || atoms_.rows() == 0) {
    throw Error(ErrorKind::Dimension, "measure needs at least one atom of positive dimension");
  }
  if (weights_.size() != atoms_.cols()) {
    throw Error(ErrorKind::Dimension, "one weight per atom required");
  }
  if (!atoms_.allFinite()) throw Error(ErrorKind::Domain, "atoms must be finite");
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i))) {
      throw Error(ErrorKind::InfeasibleWeights, "weights must be positive", static_cast<long>(i));
    }
    total += weights_(i);
  }
  if (std::abs(static_cast<double>(total) - 1.0) > kWeightTol) {
    throw Error(ErrorKind::InfeasibleWeights, "weights must sum to 1");
  }
  uniform_ = (weights_.array() == weights_(0)).all();
}

DiscreteMeasure DiscreteMeasure::uniform(Mat atoms) {
  const auto n = atoms.cols();
  if (n == 0) throw Error(ErrorKind::Dimension, "measure needs at least one atom");
  Vec w = Vec::Constant(n, 1.0 / static_cast<double>(n));
  DiscreteMeasure mu(std::move(atoms), std::move(w));
  mu.uniform_ = true;
  return mu;
}

DiscreteMeasure DiscreteMeasure::uniform(const std::vector<Vec>& atoms) {
  if (atoms.empty()) throw Error(ErrorKind::Dimension, "measure needs at least one atom");
  Mat m(atoms[0].size(), static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != m.rows()) {
      throw Error(ErrorKind::Dimension, "atoms differ in dimension", static_cast<long>(i));
    }
    m.col(static_cast<Eigen::Index>(i)) = atoms[i];
  }
  return uniform(std::move(m));
}

Mat cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                Exec exec) {
  check_p(p);
  check_same_dim(mu, nu);
  const Mat& X = mu.atoms();
  const Mat& Y = nu.atoms();
  const long m = mu.size();
  const long n = nu.size();
  Mat c(m, n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < n; ++j) c(i, j) = powered_distance(X, i, Y, j, p);
  }
  return c;
}

double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double p, Exec exec) {
  const Mat c = cost_matrix(mu, nu, p, exec);
  double total = 0.0;
  if (mu.is_uniform() && nu.is_uniform() && mu.size() == nu.size()) {
    total = solve_assignment(c).cost / static_cast<double>(mu.size());
  } else {
    total = solve_transport(mu.weights(), nu.weights(), c).cost;
  }
  return std::pow(std::max(0.0, total), 1.0 / p);
}

double wasserstein_brute_force(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  check_p(p);
  check_same_dim(mu, nu);
  if (mu.size() != nu.size() || !mu.is_uniform() || !nu.is_uniform()) {
    throw Error(ErrorKind::Dimension, "brute force needs uniform measures of equal size");
  }
  if (mu.size() > 9) throw Error(ErrorKind::SizeCap, "brute force limited to 9 atoms");
  const int n = mu.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  long double best = std::numeric_limits<long double>::infinity();
  do {
    long double total = 0.0L;
    for (int i = 0; i < n; ++i) total += powered_distance(mu.atoms(), i, nu.atoms(), perm[i], p);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(static_cast<double>(best / n), 1.0 / p);
}

std::vector<OtSelftestCase> ot_selftest(int cases, std::uint64_t seed) {
  if (cases < 0) throw Error(ErrorKind::Domain, "case count must be >= 0");
  std::vector<OtSelftestCase> out;
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick_n(1, 6), pick_d(1, 4), pick_p(1, 3);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    OtSelftestCase t;
    t.N = pick_n(rng);
    t.d = pick_d(rng);
    t.p = pick_p(rng);
    Mat x(t.d, t.N), y(t.d, t.N);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = z(rng);
    const auto mu = DiscreteMeasure::uniform(x), nu = DiscreteMeasure::uniform(y);
    t.solver = wasserstein_p(mu, nu, t.p);
    t.brute = wasserstein_brute_force(mu, nu, t.p);
    out.push_back(t);
  }
  return out;
}

double wasserstein_upper_bound_paired(const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu, double p) {
  check_p(p);
  check_same_dim(mu, nu);
  if (mu.size() != nu.size() || !mu.is_uniform() || !nu.is_uniform()) {
    throw Error(ErrorKind::Dimension, "paired bound needs uniform measures of equal size");
  }
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    total += powered_distance(mu.atoms(), i, nu.atoms(), i, p);
  }
  return std::pow(static_cast<double>(total / mu.size()), 1.0 / p);
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const Mat& M) {
  if (M.cols() != mu.dim()) {
    throw Error(ErrorKind::Dimension, "pushforward matrix has wrong column count");
  }
  return DiscreteMeasure(M * mu.atoms(), mu.weights());
}

DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& q,
                         long max_atoms) {
  check_same_dim(mu, q);
  const long n = static_cast<long>(mu.size()) * q.size();
  if (n > max_atoms) {
    throw Error(ErrorKind::SizeCap,
                "convolution would produce " + std::to_string(n) +
                    " atoms, above the cap " + std::to_string(max_atoms));
  }
  Mat atoms(mu.dim(), n);
  Vec w(n);
  long k = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (Eigen::Index j = 0; j < q.size(); ++j, ++k) {
      atoms.col(k) = mu.atoms().col(i) + q.atoms().col(j);
      w(k) = mu.weights()(i) * q.weights()(j);
    }
  }
  w /= w.sum();
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

double pth_moment_norm(const DiscreteMeasure& mu, double p) {
  check_p(p);
  long double total = 0.0L;
  const Mat zero = Mat::Zero(mu.dim(), 1);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    total += mu.weights()(i) * powered_distance(mu.atoms(), i, zero, 0, p);
  }
  return std::pow(static_cast<double>(total), 1.0 / p);
}

void write_measure(std::ostream& os, const DiscreteMeasure& mu) {
  for (int k = 0; k < mu.dim(); ++k) os << "x" << k << ' ';
  os << "weight\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (int k = 0; k < mu.dim(); ++k) os << mu.atoms()(k, i) << ' ';
    os << mu.weights()(i) << '\n';
  }
}

DiscreteMeasure read_measure(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Io, "missing header row");
  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    if (!ss.eof()) throw Error(ErrorKind::Io, "non-numeric field", lineno);
    if (row.size() < 2 || (!rows.empty() && row.size() != rows[0].size())) {
      throw Error(ErrorKind::Io, "inconsistent column count", lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Io, "measure file has no atoms");
  const auto d = static_cast<Eigen::Index>(rows[0].size() - 1);
  Mat atoms(d, static_cast<Eigen::Index>(rows.size()));
  Vec w(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) atoms(k, static_cast<Eigen::Index>(i)) = rows[i][k];
    w(static_cast<Eigen::Index>(i)) = rows[i][d];
  }
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

}  // namespace dynamb
