#pragma once

#include <cstdint>
#include <vector>

#include "dynamb/parallel.hpp"
#include "dynamb/radius.hpp"
#include "dynamb/scenario.hpp"
#include "dynamb/wasserstein.hpp"

namespace dynamb {

// RNG layout: stream 0 feeds the reference measure, stream 1 + t feeds trial
// t. Within a stream, substream i drives realization i and substreams from
// kAuxSubstream on are left to consumers such as true-cost sampling.
inline constexpr std::uint64_t kReferenceStream = 0;
inline constexpr std::uint64_t kAuxSubstream = std::uint64_t{1} << 40;
inline std::uint64_t trial_stream(int trial) { return 1 + static_cast<std::uint64_t>(trial); }

struct Realizations {
  std::vector<Vec> xi0;
  std::vector<Vec> xi_ell;      // true states at ell
  std::vector<Vec> xi_hat_ell;  // observer estimates at ell
  // ||Psi_ell|| ||z|| + sum_k ||Psi G|| ||w||, per realization
  std::vector<double> frak_M;
  // sum_k ||Psi K|| ||v||_1, per realization
  std::vector<double> frak_E;
};

// N independent realizations; realization i uses substream i of `stream`.
Realizations simulate_realizations(const Scenario& sc, const TransitionProducts& tp,
                                   long N, std::uint64_t seed, std::uint64_t stream);

// Samples of xi_ell under the true law, without observer.
std::vector<Vec> sample_true_states(const Scenario& sc, long count, std::uint64_t seed,
                                    std::uint64_t stream, std::uint64_t first_substream = 0);

// Proxy for the true law of xi_ell.
DiscreteMeasure reference_measure(const Scenario& sc, int n_ref, std::uint64_t seed);

// Total radius at the scenario's ell with its split policy.
RadiusBreakdown scenario_radius(const Scenario& sc, const TransitionProducts& tp,
                                long N, double beta);

struct TrialResult {
  DiscreteMeasure empirical;            // atoms xi_ell^i
  DiscreteMeasure estimator_empirical;  // atoms xi_hat_ell^i
  double W_emp_est = 0.0;
  double W_est_ref = 0.0;
  double psi = 0.0;
  bool covered = false;
  // Samplewise bound on W_emp_est from the realized noise.
  double lemma_rhs = 0.0;
};

TrialResult run_trial(const Scenario& sc, const TransitionProducts& tp, long N, double psi,
                      const DiscreteMeasure& reference, std::uint64_t seed, int trial);

struct CoverageSummary {
  std::vector<TrialResult> trials;
  RadiusBreakdown radius;
  double psi = 0.0;       // radius actually tested (override or certified)
  double fraction = 0.0;  // covered trials / T
  double floor = 0.0;     // (1 - beta) - 3 sqrt(beta (1 - beta) / T)
  int lemma_violations = 0;
};

CoverageSummary coverage_experiment(const Scenario& sc, const CoverageSettings& cs,
                                    std::uint64_t seed, Exec exec = Exec::Parallel);

struct CenterDistanceStats {
  std::vector<double> distances;  // W_p(estimator empirical, true empirical) per trial
  double quantile = 0.0;          // empirical (1 - beta_ns) quantile
  double bound = 0.0;             // noise radius at beta_ns
};

CenterDistanceStats paired_center_distance_stats(const Scenario& sc, long N, int trials,
                                                 double beta_ns, std::uint64_t seed,
                                                 Exec exec = Exec::Parallel);

// Empirical check of P(((1/N) sum X_i^p)^{1/p} - 1 >= t) <= 2 exp(-c' N alpha_p(t) / R^2)
// for X = |Z| / E[|Z|^p]^{1/p}, Z standard normal, R = ||X||_{psi_p} + 1/ln 2.
struct ConcentrationPoint {
  long N = 0;
  double t = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
};

std::vector<ConcentrationPoint> concentration_check(double p, const std::vector<long>& Ns,
                                                    const std::vector<double>& ts, int reps,
                                                    std::uint64_t seed, double c_prime = 0.1,
                                                    Exec exec = Exec::Parallel);

}  // namespace dynamb
