#include "dynamb/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dynamb/error.hpp"
#include "dynamb/rng.hpp"

namespace dynamb {

namespace {

struct PropagationNorms {
  double psi_ell = 0.0;
  std::vector<double> psi_G;  // index k-1 for k = 1..ell
  std::vector<double> psi_K;
};

PropagationNorms propagation_norms(const Scenario& sc, const TransitionProducts& tp) {
  const int ell = sc.ell;
  if (tp.horizon() < ell) throw Error(ErrorKind::Domain, "transition products shorter than ell");
  PropagationNorms n;
  n.psi_ell = spectral_norm(tp.psi(ell, 0));
  for (int k = 1; k <= ell; ++k) {
    const Mat& psi = tp.psi(ell, ell - k + 1);
    n.psi_G.push_back(spectral_norm(psi * sc.sys.G(ell - k)));
    n.psi_K.push_back(spectral_norm(psi * sc.obs.K(ell - k)));
  }
  return n;
}

Vec propagate_free(const Scenario& sc, Vec x, Rng& rng) {
  for (int k = 0; k < sc.ell; ++k) {
    x = sc.sys.A(k) * x;
    if (sc.process) x += sc.sys.G(k) * sc.process->draw(rng);
  }
  return x;
}

double power_mean(const std::vector<double>& v, double p) {
  double s = 0.0;
  for (double x : v) s += std::pow(x, p);
  return std::pow(s / static_cast<double>(v.size()), 1.0 / p);
}

}  // namespace

Realizations simulate_realizations(const Scenario& sc, const TransitionProducts& tp,
                                   long N, std::uint64_t seed, std::uint64_t stream) {
  if (N < 1) throw Error(ErrorKind::Domain, "N must be >= 1");
  const PropagationNorms norms = propagation_norms(sc, tp);
  const int ell = sc.ell, q = sc.sys.q(), r = sc.sys.r();
  const LTVSystem sys = sc.sys.with_horizon(ell);
  Realizations out;
  for (long i = 0; i < N; ++i) {
    Rng rng = make_rng(seed, stream, static_cast<std::uint64_t>(i));
    const Vec xi0 = sc.initial.draw(rng);
    std::vector<Vec> w(static_cast<std::size_t>(ell), Vec::Zero(q));
    if (sc.process) {
      for (auto& wk : w) wk = sc.process->draw(rng);
    }
    const GaussianMixture1D& vlaw = sc.measurement.for_realization(i);
    std::vector<Vec> v(static_cast<std::size_t>(ell), Vec(r));
    for (auto& vk : v) {
      for (int j = 0; j < r; ++j) vk(j) = vlaw.draw(rng);
    }
    const Realization real = simulate_realization(sys, xi0, w, v);
    const std::vector<Vec> est = run_observer(sys, sc.obs, real.outputs);

    double m = norms.psi_ell * xi0.norm(), e = 0.0;
    for (int k = 1; k <= ell; ++k) {
      m += norms.psi_G[k - 1] * w[ell - k].norm();
      e += norms.psi_K[k - 1] * v[ell - k].lpNorm<1>();
    }
    out.xi0.push_back(xi0);
    out.xi_ell.push_back(real.states.back());
    out.xi_hat_ell.push_back(est.back());
    out.frak_M.push_back(m);
    out.frak_E.push_back(e);
  }
  return out;
}

std::vector<Vec> sample_true_states(const Scenario& sc, long count, std::uint64_t seed,
                                    std::uint64_t stream, std::uint64_t first_substream) {
  if (count < 1) throw Error(ErrorKind::Domain, "sample count must be >= 1");
  std::vector<Vec> out(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, stream, first_substream + static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = propagate_free(sc, sc.initial.draw(rng), rng);
  }
  return out;
}

DiscreteMeasure reference_measure(const Scenario& sc, int n_ref, std::uint64_t seed) {
  return DiscreteMeasure::uniform(sample_true_states(sc, n_ref, seed, kReferenceStream));
}

RadiusBreakdown scenario_radius(const Scenario& sc, const TransitionProducts& tp,
                                long N, double beta) {
  auto at = [&](const ConfidenceSplit& s) {
    return total_radius(sc.sys, sc.obs, tp, sc.noise, sc.ell, N, s, sc.p, sc.radius);
  };
  if (sc.split == SplitPolicy::Equal) return at(ConfidenceSplit::equal(beta));
  return at(optimal_split(beta, [&](const ConfidenceSplit& s) { return at(s).psi_total; }));
}

TrialResult run_trial(const Scenario& sc, const TransitionProducts& tp, long N, double psi,
                      const DiscreteMeasure& reference, std::uint64_t seed, int trial) {
  const Realizations real = simulate_realizations(sc, tp, N, seed, trial_stream(trial));
  TrialResult t{DiscreteMeasure::uniform(real.xi_ell), DiscreteMeasure::uniform(real.xi_hat_ell)};
  t.W_emp_est = wasserstein_p(t.estimator_empirical, t.empirical, sc.p);
  t.W_est_ref = wasserstein_p(t.estimator_empirical, reference, sc.p);
  t.psi = psi;
  t.covered = t.W_est_ref <= psi;
  t.lemma_rhs = std::pow(2.0, (sc.p - 1.0) / sc.p) * (power_mean(real.frak_M, sc.p) + power_mean(real.frak_E, sc.p));
  return t;
}

CoverageSummary coverage_experiment(const Scenario& sc, const CoverageSettings& cs,
                                    std::uint64_t seed, Exec exec) {
  if (cs.trials < 1) throw Error(ErrorKind::Domain, "need at least one trial");
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  CoverageSummary out;
  out.radius = scenario_radius(sc, tp, cs.N, cs.beta);
  out.psi = cs.psi_override.value_or(out.radius.psi_total);
  const DiscreteMeasure reference = reference_measure(sc, cs.reference_samples, seed);

  std::vector<std::optional<TrialResult>> slots(static_cast<std::size_t>(cs.trials));
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int t = 0; t < cs.trials; ++t) {
    slots[static_cast<std::size_t>(t)] = run_trial(sc, tp, cs.N, out.psi, reference, seed, t);
  }
  int covered = 0;
  for (auto& s : slots) {
    covered += s->covered ? 1 : 0;
    if (s->W_emp_est > s->lemma_rhs * (1.0 + 1e-12)) ++out.lemma_violations;
    out.trials.push_back(std::move(*s));
  }
  const double T = static_cast<double>(cs.trials);
  out.fraction = covered / T;
  out.floor = (1.0 - cs.beta) - 3.0 * std::sqrt(cs.beta * (1.0 - cs.beta) / T);
  return out;
}

CenterDistanceStats paired_center_distance_stats(const Scenario& sc, long N, int trials,
                                                 double beta_ns, std::uint64_t seed, Exec exec) {
  if (trials < 1) throw Error(ErrorKind::Domain, "need at least one trial");
  if (!(beta_ns > 0.0 && beta_ns < 1.0)) throw Error(ErrorKind::Domain, "beta_ns must lie in (0,1)");
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  CenterDistanceStats out;
  out.distances.assign(static_cast<std::size_t>(trials), 0.0);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int t = 0; t < trials; ++t) {
    const Realizations real = simulate_realizations(sc, tp, N, seed, trial_stream(t));
    out.distances[static_cast<std::size_t>(t)] = wasserstein_p(
        DiscreteMeasure::uniform(real.xi_hat_ell), DiscreteMeasure::uniform(real.xi_ell), sc.p);
  }
  std::vector<double> sorted = out.distances;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(std::ceil((1.0 - beta_ns) * trials)) - 1;
  out.quantile = sorted[std::min(idx, sorted.size() - 1)];
  const FrakConstants fc = frak_constants(sc.sys, sc.obs, tp, sc.noise.bounds, sc.noise.rho_xi0,
                                          sc.noise.rho_w, sc.ell);
  out.bound = noise_radius(fc, N, beta_ns, sc.radius.c_prime);
  return out;
}

std::vector<ConcentrationPoint> concentration_check(double p, const std::vector<long>& Ns,
                                                    const std::vector<double>& ts, int reps,
                                                    std::uint64_t seed, double c_prime, Exec exec) {
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "p must be >= 1");
  if (reps < 1) throw Error(ErrorKind::Domain, "need at least one repetition");
  // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
  const double moment = std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
  const double scale = std::pow(moment, 1.0 / p);
  const double psi = psi_norm_numeric(GaussianMixture1D({{1.0, 0.0, 1.0}}), p);
  const double R = psi / scale + 1.0 / std::numbers::ln2;

  std::vector<ConcentrationPoint> out;
  for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
    const long N = Ns[ni];
    if (N < 1) throw Error(ErrorKind::Domain, "N must be >= 1");
    std::vector<double> stat(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng = make_rng(seed, ni, static_cast<std::uint64_t>(rep));
      std::normal_distribution<double> z(0.0, 1.0);
      double s = 0.0;
      for (long i = 0; i < N; ++i) s += std::pow(std::abs(z(rng)) / scale, p);
      stat[static_cast<std::size_t>(rep)] = std::pow(s / static_cast<double>(N), 1.0 / p) - 1.0;
    }
    for (double t : ts) {
      const long hits = std::count_if(stat.begin(), stat.end(), [t](double x) { return x >= t; });
      out.push_back({N, t, static_cast<double>(hits) / reps,
                     2.0 * std::exp(-c_prime * static_cast<double>(N) * alpha_p(t, p) / (R * R))});
    }
  }
  return out;
}

}  // namespace dynamb
