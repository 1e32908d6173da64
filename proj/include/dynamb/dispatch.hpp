#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dynamb/battery.hpp"
#include "dynamb/linalg.hpp"
#include "dynamb/wasserstein.hpp"

namespace dynamb {

// g(P) = quad (P - center)^2 on [pmin, pmax].
struct Generator {
  double quad = 0.25;
  double center = 0.1;
  double pmin = 0.2;
  double pmax = 0.5;
};

// Battery i is charged h(S) = cost_alpha[i] S + cost_beta[i] when selected.
struct DispatchProblem {
  std::vector<Generator> generators;
  std::vector<BatteryCell> cells;
  std::vector<double> cost_alpha;
  std::vector<double> cost_beta;
  double demand = 0.0;
  double penalty = 1.0;  // c
  int ell = 0;
  DiscreteMeasure center;  // estimated stacked deviations at ell
  double radius = 0.0;

  int n_generators() const { return static_cast<int>(generators.size()); }
  int n_batteries() const { return static_cast<int>(cells.size()); }
  int state_dim() const { return 2 * n_batteries(); }
  void validate() const;
};

// Per-selection data: with a = eta*alpha_hat and at = eta*alpha_tilde,
//   cost = f(P) + xi' A xi + s(P)' xi,
//   f(P) = g(P) + c (1'P + b - D)^2 + bt,  A = c a a',
//   s(P) = 2c (1'P + b - D) a + at.
struct ReformulationData {
  std::vector<int> eta;
  Vec a;        // eta * alpha_hat
  double b = 0.0;   // eta' beta_hat
  Vec at;       // eta * alpha_tilde
  double bt = 0.0;  // eta' beta_tilde
  double c = 0.0;
  double demand = 0.0;

  double lambda_max() const { return c * a.squaredNorm(); }
  Mat frak_A() const { return c * a * a.transpose(); }
  Vec s(const Vec& P) const;
};

ReformulationData reformulation(const DispatchProblem& prob, const std::vector<int>& eta);

double generator_cost(const DispatchProblem& prob, const Vec& P);
double f_eta(const DispatchProblem& prob, const ReformulationData& rd, const Vec& P);
double h_eta(const ReformulationData& rd, const Vec& P, const Vec& xi);

// Realized cost of (eta, P) for stacked deviations xi.
double dispatch_cost(const DispatchProblem& prob, const std::vector<int>& eta,
                     const Vec& P, const Vec& xi);

// Dual objective for lambda > lambda_max(A); throws DualInfeasible otherwise.
// Uses the rank-one inverse, which avoids the lambda |xi_hat|^2 cancellation
// for large lambda.
double dro_inner_value(const DispatchProblem& prob, const std::vector<int>& eta,
                       const Vec& P, double lambda);

// min 0.5 x'Mx + q'x over lo <= x <= hi by projected gradient with exact
// line search along the projected step.
struct BoxQpResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  double pg_norm = 0.0;  // infinity norm of the projected-gradient step
};
BoxQpResult solve_box_qp(const Mat& M, const Vec& q, const Vec& lo, const Vec& hi,
                         double tol = 1e-10, int max_iter = 100000);

struct DispatchSolution {
  std::vector<int> eta;
  Vec P;
  double lambda = 0.0;  // DRO only; 0 when the ambiguity term is inactive
  double value = 0.0;
};

// Minimise over P for a fixed selection.
DispatchSolution solve_dro_fixed(const DispatchProblem& prob, const std::vector<int>& eta);
DispatchSolution solve_saa_fixed(const DispatchProblem& prob, const std::vector<int>& eta);

// Enumerate eta in {0,1}^n2 (n2 <= 15); ties go to the lexicographically
// smallest selection.
DispatchSolution solve_dro(const DispatchProblem& prob);
DispatchSolution solve_saa(const DispatchProblem& prob);

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

// Monte Carlo estimate of E[cost(eta, P, xi)] over the given samples.
CostEstimate true_cost(const DispatchProblem& prob, const std::vector<int>& eta,
                       const Vec& P, const std::vector<Vec>& xi_samples);

}  // namespace dynamb
