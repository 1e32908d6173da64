#include "dynamb/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

// Objective g(P) + phi2 u^2 + phi1 u + phi0 with u = 1'P + b - D.
struct ScalarQuadratic {
  double phi2 = 0.0;
  double phi1 = 0.0;
  double phi0 = 0.0;
};

struct AtomMoments {
  Vec mean;          // sum_i w_i xi_i
  double a_mean = 0.0;   // sum_i w_i a'xi_i
  double a_sq = 0.0;     // sum_i w_i (a'xi_i)^2
  double norm_sq = 0.0;  // sum_i w_i |xi_i|^2
};

AtomMoments moments(const DiscreteMeasure& mu, const Vec& a) {
  AtomMoments m;
  m.mean = mu.atoms() * mu.weights();
  for (int i = 0; i < mu.size(); ++i) {
    const double w = mu.weights()(i);
    const double ax = a.dot(mu.atoms().col(i));
    m.a_mean += w * ax;
    m.a_sq += w * ax * ax;
    m.norm_sq += w * mu.atoms().col(i).squaredNorm();
  }
  return m;
}

// Dual objective without the P-independent g(P) part, as a quadratic in u.
ScalarQuadratic dro_quadratic(const ReformulationData& rd, const AtomMoments& m,
                              double lambda, double radius) {
  const double c = rd.c;
  const double mu = lambda - rd.lambda_max();
  const double aa = rd.a.squaredNorm(), a_at = rd.a.dot(rd.at);
  const double k1 = 2.0 * c * aa;
  // k0_i = a'at + 2 lambda a'xi_i
  const double k0_mean = a_at + 2.0 * lambda * m.a_mean;
  const double k0_sq = a_at * a_at + 4.0 * lambda * a_at * m.a_mean + 4.0 * lambda * lambda * m.a_sq;
  const double inv = c / (4.0 * lambda * mu);
  ScalarQuadratic q;
  q.phi2 = c + c * c * aa / lambda + inv * k1 * k1;
  q.phi1 = 2.0 * c * rd.a.dot(m.mean) + c * a_at / lambda + inv * 2.0 * k1 * k0_mean;
  q.phi0 = rd.at.dot(m.mean) + rd.at.squaredNorm() / (4.0 * lambda) + inv * k0_sq + rd.bt +
           lambda * radius * radius;
  return q;
}

ScalarQuadratic saa_quadratic(const ReformulationData& rd, const AtomMoments& m) {
  ScalarQuadratic q;
  q.phi2 = rd.c;
  q.phi1 = 2.0 * rd.c * m.a_mean;
  q.phi0 = rd.c * m.a_sq + rd.at.dot(m.mean) + rd.bt;
  return q;
}

struct InnerResult {
  Vec P;
  double value = 0.0;
};

// Stationarity gives P_j(u) = clamp(center_j - (2 phi2 u + phi1) / (2 quad_j))
// and u = 1'P(u) + b - D; the right side is nonincreasing in u, so the
// fixed point is found by bisection on the attainable range of u.
InnerResult minimise_over_box(const DispatchProblem& prob, const ReformulationData& rd,
                              const ScalarQuadratic& q) {
  const int n = prob.n_generators();
  const double off = rd.b - rd.demand;
  auto p_of_u = [&](double u) {
    Vec P(n);
    const double slope = 2.0 * q.phi2 * u + q.phi1;
    for (int j = 0; j < n; ++j) {
      const Generator& g = prob.generators[j];
      P(j) = std::clamp(g.center - slope / (2.0 * g.quad), g.pmin, g.pmax);
    }
    return P;
  };
  double lo = off, hi = off;
  for (const Generator& g : prob.generators) {
    lo += g.pmin;
    hi += g.pmax;
  }
  for (int it = 0; it < 200 && hi > lo; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mid - p_of_u(mid).sum() - off < 0.0 ? lo : hi) = mid;
  }
  InnerResult r;
  r.P = p_of_u(0.5 * (lo + hi));
  const double u = r.P.sum() + off;
  r.value = generator_cost(prob, r.P) + q.phi2 * u * u + q.phi1 * u + q.phi0;
  return r;
}

bool is_inactive(const ReformulationData& rd) {
  return rd.a.squaredNorm() == 0.0 && rd.at.squaredNorm() == 0.0;
}

}  // namespace

void DispatchProblem::validate() const {
  if (generators.empty()) throw Error(ErrorKind::Domain, "need at least one generator");
  for (std::size_t j = 0; j < generators.size(); ++j) {
    const Generator& g = generators[j];
    if (!(g.pmin <= g.pmax) || !(g.quad > 0.0)) {
      throw Error(ErrorKind::Domain, "generator needs pmin <= pmax and quad > 0", static_cast<long>(j));
    }
  }
  if (cost_alpha.size() != cells.size() || cost_beta.size() != cells.size()) {
    throw Error(ErrorKind::Dimension, "one cost pair per battery required");
  }
  if (cells.size() > 15) throw Error(ErrorKind::SizeCap, "selection enumeration capped at 15 batteries");
  if (!(penalty > 0.0)) throw Error(ErrorKind::Domain, "penalty c must be positive");
  if (!(radius >= 0.0)) throw Error(ErrorKind::Domain, "ambiguity radius must be >= 0");
  if (center.dim() != state_dim()) throw Error(ErrorKind::Dimension, "center dimension must be 2 n2");
  if (ell < 0) throw Error(ErrorKind::Domain, "ell must be >= 0");
}

Vec ReformulationData::s(const Vec& P) const {
  const double u = P.sum() + b - demand;
  return 2.0 * c * u * a + at;
}

ReformulationData reformulation(const DispatchProblem& prob, const std::vector<int>& eta) {
  const int n2 = prob.n_batteries();
  if (static_cast<int>(eta.size()) != n2) throw Error(ErrorKind::Dimension, "eta has wrong length");
  ReformulationData rd;
  rd.eta = eta;
  rd.a = Vec::Zero(2 * n2);
  rd.at = Vec::Zero(2 * n2);
  rd.c = prob.penalty;
  rd.demand = prob.demand;
  for (int i = 0; i < n2; ++i) {
    if (eta[i] != 0 && eta[i] != 1) throw Error(ErrorKind::Domain, "eta entries must be 0 or 1", i);
    if (!eta[i]) continue;
    const InjectedPower s = battery_injected_power(prob.cells[i], prob.ell);
    rd.a.segment(2 * i, 2) = s.alpha_hat;
    rd.at.segment(2 * i, 2) = prob.cost_alpha[i] * s.alpha_hat;
    rd.b += s.beta_hat;
    rd.bt += prob.cost_alpha[i] * s.beta_hat + prob.cost_beta[i];
  }
  return rd;
}

double generator_cost(const DispatchProblem& prob, const Vec& P) {
  if (P.size() != prob.n_generators()) throw Error(ErrorKind::Dimension, "P has wrong length");
  double g = 0.0;
  for (int j = 0; j < P.size(); ++j) {
    const double e = P(j) - prob.generators[j].center;
    g += prob.generators[j].quad * e * e;
  }
  return g;
}

double f_eta(const DispatchProblem& prob, const ReformulationData& rd, const Vec& P) {
  const double u = P.sum() + rd.b - rd.demand;
  return generator_cost(prob, P) + rd.c * u * u + rd.bt;
}

double h_eta(const ReformulationData& rd, const Vec& P, const Vec& xi) {
  const double ax = rd.a.dot(xi);
  return rd.c * ax * ax + rd.s(P).dot(xi);
}

double dispatch_cost(const DispatchProblem& prob, const std::vector<int>& eta,
                     const Vec& P, const Vec& xi) {
  const int n2 = prob.n_batteries();
  if (static_cast<int>(eta.size()) != n2) throw Error(ErrorKind::Dimension, "eta has wrong length");
  if (xi.size() != 2 * n2) throw Error(ErrorKind::Dimension, "xi has wrong length");
  double total = P.sum(), cost = generator_cost(prob, P);
  for (int i = 0; i < n2; ++i) {
    if (!eta[i]) continue;
    const double S = battery_injected_power(prob.cells[i], prob.ell).at(xi.segment(2 * i, 2));
    total += S;
    cost += prob.cost_alpha[i] * S + prob.cost_beta[i];
  }
  const double gap = total - prob.demand;
  return cost + prob.penalty * gap * gap;
}

double dro_inner_value(const DispatchProblem& prob, const std::vector<int>& eta,
                       const Vec& P, double lambda) {
  prob.validate();
  const ReformulationData rd = reformulation(prob, eta);
  const double lmax = rd.lambda_max();
  if (!(lambda > lmax + 1e-12 * std::max(1.0, lmax))) {
    throw Error(ErrorKind::DualInfeasible, "dual infeasible: lambda must exceed lambda_max");
  }
  const double mu = lambda - lmax;
  const Vec s = rd.s(P);
  const double as = rd.a.dot(s);
  const DiscreteMeasure& c = prob.center;
  double acc = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const auto xi = c.atoms().col(i);
    const double ar = as + 2.0 * lambda * rd.a.dot(xi);
    acc += c.weights()(i) *
           (s.dot(xi) + s.squaredNorm() / (4.0 * lambda) + rd.c * ar * ar / (4.0 * lambda * mu));
  }
  return f_eta(prob, rd, P) + lambda * prob.radius * prob.radius + acc;
}

BoxQpResult solve_box_qp(const Mat& M, const Vec& q, const Vec& lo, const Vec& hi,
                         double tol, int max_iter) {
  const Eigen::Index n = q.size();
  if (M.rows() != n || M.cols() != n || lo.size() != n || hi.size() != n) {
    throw Error(ErrorKind::Dimension, "box QP shape mismatch");
  }
  if ((lo.array() > hi.array()).any()) throw Error(ErrorKind::Domain, "box QP needs lo <= hi");
  auto project = [&](const Vec& x) -> Vec { return x.cwiseMax(lo).cwiseMin(hi); };
  // Step 1/L with L the largest eigenvalue of the symmetric Hessian.
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const double L = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  if (es.eigenvalues().minCoeff() < -1e-12 * L) throw Error(ErrorKind::Domain, "box QP Hessian not PSD");
  BoxQpResult out;
  out.x = project(0.5 * (lo + hi));
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const Vec g = M * out.x + q;
    const Vec d = project(out.x - g / L) - out.x;
    out.pg_norm = d.cwiseAbs().maxCoeff() * L;
    if (out.pg_norm <= tol) break;
    // Exact minimiser along the feasible segment x + t d, t in [0, 1].
    const double curv = d.dot(M * d);
    const double slope = g.dot(d);
    double t = curv > 0.0 ? -slope / curv : 1.0;
    t = std::clamp(t, 0.0, 1.0);
    if (t == 0.0) break;
    out.x += t * d;
    out.x = project(out.x);
  }
  if (out.pg_norm > tol) {
    throw Error(ErrorKind::Solver, "projected gradient did not reach tolerance");
  }
  out.value = 0.5 * out.x.dot(M * out.x) + q.dot(out.x);
  return out;
}

DispatchSolution solve_saa_fixed(const DispatchProblem& prob, const std::vector<int>& eta) {
  prob.validate();
  const ReformulationData rd = reformulation(prob, eta);
  const AtomMoments m = moments(prob.center, rd.a);
  const InnerResult r = minimise_over_box(prob, rd, saa_quadratic(rd, m));
  return {eta, r.P, 0.0, r.value};
}

DispatchSolution solve_dro_fixed(const DispatchProblem& prob, const std::vector<int>& eta) {
  prob.validate();
  const ReformulationData rd = reformulation(prob, eta);
  const AtomMoments m = moments(prob.center, rd.a);
  if (is_inactive(rd)) {
    // No battery term: the dual reduces to f + lambda psi^2, minimised at lambda -> 0.
    const InnerResult r = minimise_over_box(prob, rd, saa_quadratic(rd, m));
    return {eta, r.P, 0.0, r.value};
  }
  if (prob.radius == 0.0) {
    // The value decreases in lambda; its infimum is the lambda -> inf limit,
    // which is the empirical average.
    const InnerResult r = minimise_over_box(prob, rd, saa_quadratic(rd, m));
    return {eta, r.P, std::numeric_limits<double>::infinity(), r.value};
  }
  const double lmax = rd.lambda_max();
  auto value_at = [&](double log_mu) {
    return minimise_over_box(prob, rd, dro_quadratic(rd, m, lmax + std::exp(log_mu), prob.radius));
  };

  // Initial bracket lambda_hi = 2 lambda_max + 10 |s| at the box centre.
  Vec mid(prob.n_generators());
  for (int j = 0; j < mid.size(); ++j) mid(j) = 0.5 * (prob.generators[j].pmin + prob.generators[j].pmax);
  const double scale = std::max(rd.s(mid).norm() + std::sqrt(m.norm_sq), 1e-12);
  double hi = std::log(lmax + 10.0 * scale);
  double lo = hi - std::log(1e8);

  constexpr int kGrid = 40;
  constexpr int kMaxExpand = 400;
  std::vector<double> xs(kGrid), vs(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = lo + (hi - lo) * i / (kGrid - 1);
    vs[i] = value_at(xs[i]).value;
    if (vs[i] < vs[best]) best = i;
  }
  double a = 0.0, b = 0.0;
  const double step = std::log(2.0);
  if (best == kGrid - 1 || best == 0) {
    // Walk outward by doubling (or halving) mu until the value turns up.
    const double dir = best == 0 ? -step : step;
    double x = xs[best], v = vs[best];
    int it = 0;
    for (; it < kMaxExpand; ++it) {
      const double vn = value_at(x + dir).value;
      if (!(vn < v)) break;
      x += dir;
      v = vn;
    }
    if (it == kMaxExpand) throw Error(ErrorKind::SearchBracket, "lambda search did not find an interior minimum");
    a = std::min(x - step, x + step);
    b = std::max(x - step, x + step);
  } else {
    a = xs[best - 1];
    b = xs[best + 1];
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = value_at(x1).value, f2 = value_at(x2).value;
  while (b - a > 1e-10 * std::max(1.0, std::abs(a))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = value_at(x1).value;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = value_at(x2).value;
    }
  }
  const double x = f1 <= f2 ? x1 : x2;
  const InnerResult r = value_at(x);
  const double lambda = lmax + std::exp(x);
  return {eta, r.P, lambda, dro_inner_value(prob, eta, r.P, lambda)};
}

namespace {

DispatchSolution enumerate(const DispatchProblem& prob,
                           DispatchSolution (*solve)(const DispatchProblem&, const std::vector<int>&)) {
  prob.validate();
  const int n2 = prob.n_batteries();
  DispatchSolution best;
  best.value = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << n2); ++mask) {
    // Lexicographic order: battery 0 is the most significant entry.
    std::vector<int> eta(n2);
    for (int i = 0; i < n2; ++i) eta[i] = static_cast<int>((mask >> (n2 - 1 - i)) & 1L);
    DispatchSolution s = solve(prob, eta);
    if (s.value < best.value) best = std::move(s);
  }
  return best;
}

}  // namespace

DispatchSolution solve_dro(const DispatchProblem& prob) { return enumerate(prob, &solve_dro_fixed); }

DispatchSolution solve_saa(const DispatchProblem& prob) { return enumerate(prob, &solve_saa_fixed); }

CostEstimate true_cost(const DispatchProblem& prob, const std::vector<int>& eta,
                       const Vec& P, const std::vector<Vec>& xi_samples) {
  if (xi_samples.empty()) throw Error(ErrorKind::Domain, "true cost needs at least one sample");
  // Welford accumulation.
  double mean = 0.0, m2 = 0.0;
  long n = 0;
  for (const Vec& xi : xi_samples) {
    const double x = dispatch_cost(prob, eta, P, xi);
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  CostEstimate e;
  e.mean = mean;
  e.samples = n;
  e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return e;
}

}  // namespace dynamb
