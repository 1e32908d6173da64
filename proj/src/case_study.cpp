#include "dynamb/case_study.hpp"

#include <algorithm>
#include <optional>

#include "dynamb/error.hpp"
#include "dynamb/montecarlo.hpp"

namespace dynamb {

DispatchProblem make_dispatch_problem(const StudyConfig& cfg, DiscreteMeasure center, double radius) {
  if (!cfg.dispatch) throw Error(ErrorKind::Config, "dispatch: section missing");
  const DispatchSettings& d = *cfg.dispatch;
  DispatchProblem prob{d.generators, cfg.scenario.cells, d.cost_alpha, d.cost_beta, d.demand,
                       d.penalty,    cfg.scenario.ell,   std::move(center), radius};
  prob.validate();
  return prob;
}

CaseStudyResult run_case_study(const StudyConfig& cfg, std::uint64_t seed, Exec exec) {
  if (!cfg.dispatch) throw Error(ErrorKind::Config, "dispatch: section missing");
  const Scenario& sc = cfg.scenario;
  const DispatchSettings& d = *cfg.dispatch;
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  const std::vector<Vec> truth = sample_true_states(sc, d.true_samples, seed, kReferenceStream, kAuxSubstream);
  const long n_max = *std::max_element(d.N.begin(), d.N.end());
  const std::size_t per = d.N.size();

  std::vector<std::optional<CaseStudyRow>> slots(static_cast<std::size_t>(d.realizations) * per);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int r = 0; r < d.realizations; ++r) {
    const Realizations real = simulate_realizations(sc, tp, n_max, seed, trial_stream(r));
    for (std::size_t n = 0; n < per; ++n) {
      const long N = d.N[n];
      std::vector<Vec> atoms(real.xi_hat_ell.begin(), real.xi_hat_ell.begin() + N);
      const DispatchProblem prob = make_dispatch_problem(cfg, DiscreteMeasure::uniform(atoms), d.radii[n]);
      const DispatchSolution saa = solve_saa(prob);
      const DispatchSolution dro = solve_dro(prob);
      CaseStudyRow row;
      row.realization = r;
      row.N = N;
      row.radius = d.radii[n];
      row.saa_value = saa.value;
      row.dro_value = dro.value;
      row.eta_saa = saa.eta;
      row.eta_dro = dro.eta;
      row.true_saa = true_cost(prob, saa.eta, saa.P, truth);
      row.true_dro = true_cost(prob, dro.eta, dro.P, truth);
      slots[static_cast<std::size_t>(r) * per + n] = std::move(row);
    }
  }

  CaseStudyResult out;
  for (auto& s : slots) out.rows.push_back(std::move(*s));
  for (std::size_t n = 0; n < per; ++n) {
    CaseStudySummary sum{d.N[n], d.radii[n]};
    for (const CaseStudyRow& row : out.rows) {
      if (row.N != d.N[n]) continue;
      sum.dro_guarantee_rate += row.dro_covers() ? 1.0 : 0.0;
      sum.saa_overpromise_rate += row.saa_overpromises() ? 1.0 : 0.0;
    }
    sum.dro_guarantee_rate /= d.realizations;
    sum.saa_overpromise_rate /= d.realizations;
    out.summary.push_back(sum);
  }
  return out;
}

}  // namespace dynamb
