#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "dynamb/case_study.hpp"
#include "dynamb/error.hpp"
#include "dynamb/montecarlo.hpp"
#include "dynamb/scenario.hpp"

using namespace dynamb;

namespace {

const std::string kConfigDir = DYNAMB_CONFIG_DIR;

// Observer on a noise-free system started at the exact (zero) state.
StudyConfig silent_study() {
  const Json doc = Json::parse(R"({
    "name": "silent",
    "system": {"A": [[0.8, 0.1], [0.0, 0.5]], "H": [[1.0, 0.0]]},
    "filter": {"process": {"diag": [1e-3, 1e-3]}, "measurement": {"diag": [1e-3]}},
    "initial": {"support": {"lo": [0.0, 0.0], "hi": [0.0, 0.0]},
                "law": {"components": [{"coords": [0.0, 0.0]}]}},
    "measurement_noise": [[{"weight": 1.0, "mean": 0.0, "sd": 0.0}]],
    "ell": 4,
    "p": 2,
    "coverage": {"beta": 0.1, "N": 5, "trials": 4, "reference_samples": 10}
  })");
  return parse_study(doc);
}

StudyConfig small_toy() {
  return load_study(kConfigDir + "/toy2.json",
                    {"coverage.trials=12", "coverage.reference_samples=300", "coverage.N=8"});
}

}  // namespace

TEST(Realizations, NoiseFreeExactStartHasZeroDistance) {
  const StudyConfig cfg = silent_study();
  const CoverageSummary s = coverage_experiment(cfg.scenario, cfg.coverage, 3);
  for (const TrialResult& t : s.trials) {
    EXPECT_EQ(t.W_emp_est, 0.0);
    EXPECT_EQ(t.W_est_ref, 0.0);
    EXPECT_EQ(t.lemma_rhs, 0.0);
  }
}

TEST(Realizations, NestedPrefixesShareAtoms) {
  const StudyConfig cfg = small_toy();
  const TransitionProducts tp(cfg.scenario.sys, cfg.scenario.obs, cfg.scenario.ell);
  const Realizations a = simulate_realizations(cfg.scenario, tp, 5, 11, trial_stream(2));
  const Realizations b = simulate_realizations(cfg.scenario, tp, 9, 11, trial_stream(2));
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a.xi_ell[i], b.xi_ell[i]);
    EXPECT_EQ(a.xi_hat_ell[i], b.xi_hat_ell[i]);
  }
  const Realizations c = simulate_realizations(cfg.scenario, tp, 5, 11, trial_stream(3));
  EXPECT_NE(a.xi_ell[0], c.xi_ell[0]);
}

TEST(Realizations, SamplesStayInPropagatedSupport) {
  const StudyConfig cfg = small_toy();
  const Scenario& sc = cfg.scenario;
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  const double rho = rho_xi_ell_box(sc.sys, tp, sc.noise.rho_xi0, sc.noise.rho_w, sc.ell);
  for (const Vec& x : sample_true_states(sc, 2000, 5, kReferenceStream)) {
    EXPECT_LE(x.lpNorm<Eigen::Infinity>(), rho + 1e-12);
  }
}

TEST(Coverage, ZeroRadiusNeverCovers) {
  StudyConfig cfg = small_toy();
  cfg.coverage.psi_override = 0.0;
  const CoverageSummary s = coverage_experiment(cfg.scenario, cfg.coverage, 1);
  EXPECT_EQ(s.fraction, 0.0);
  EXPECT_EQ(s.psi, 0.0);
}

TEST(Coverage, HugeRadiusAlwaysCovers) {
  StudyConfig cfg = small_toy();
  cfg.coverage.psi_override = 1e6;
  const CoverageSummary s = coverage_experiment(cfg.scenario, cfg.coverage, 1);
  EXPECT_EQ(s.fraction, 1.0);
}

TEST(Coverage, SampleBoundOnCenterDistanceHolds) {
  const StudyConfig cfg = small_toy();
  const CoverageSummary s = coverage_experiment(cfg.scenario, cfg.coverage, 2);
  EXPECT_EQ(s.lemma_violations, 0);
  EXPECT_NEAR(s.psi, s.radius.psi_total, 0.0);
  EXPECT_NEAR(s.floor, 0.9 - 3.0 * std::sqrt(0.09 / 12.0), 1e-12);
}

TEST(Coverage, DeterministicAndSerialEqualsParallel) {
  const StudyConfig cfg = small_toy();
  const CoverageSummary a = coverage_experiment(cfg.scenario, cfg.coverage, 9, Exec::Serial);
  const CoverageSummary b = coverage_experiment(cfg.scenario, cfg.coverage, 9, Exec::Parallel);
  const CoverageSummary c = coverage_experiment(cfg.scenario, cfg.coverage, 9, Exec::Parallel);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].W_est_ref, b.trials[t].W_est_ref);
    EXPECT_EQ(a.trials[t].W_emp_est, b.trials[t].W_emp_est);
    EXPECT_EQ(b.trials[t].W_est_ref, c.trials[t].W_est_ref);
  }
  const CoverageSummary d = coverage_experiment(cfg.scenario, cfg.coverage, 10, Exec::Serial);
  EXPECT_NE(a.trials[0].W_est_ref, d.trials[0].W_est_ref);
}

TEST(CenterDistance, SingleRealizationIsPointDistance) {
  const StudyConfig cfg = small_toy();
  const Scenario& sc = cfg.scenario;
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  const CenterDistanceStats st = paired_center_distance_stats(sc, 1, 6, 0.1, 4);
  for (int t = 0; t < 6; ++t) {
    const Realizations r = simulate_realizations(sc, tp, 1, 4, trial_stream(t));
    EXPECT_NEAR(st.distances[t], (r.xi_hat_ell[0] - r.xi_ell[0]).norm(), 1e-12);
  }
  EXPECT_GT(st.bound, 0.0);
}

TEST(Concentration, BoundHoldsOnSmallGrid) {
  const auto pts = concentration_check(2.0, {5, 20}, {0.1, 0.3, 0.6}, 2000, 17);
  for (const auto& pt : pts) EXPECT_LE(pt.empirical, pt.bound) << pt.N << " " << pt.t;
  const auto serial = concentration_check(2.0, {5}, {0.2}, 500, 17, 0.1, Exec::Serial);
  const auto parallel = concentration_check(2.0, {5}, {0.2}, 500, 17, 0.1, Exec::Parallel);
  EXPECT_EQ(serial[0].empirical, parallel[0].empirical);
}

TEST(CaseStudy, SmokeRunIsDeterministic) {
  StudyConfig cfg = load_study(kConfigDir + "/battery.json",
                               {"dispatch.realizations=2", "dispatch.true_samples=200"});
  const CaseStudyResult a = run_case_study(cfg, 5, Exec::Serial);
  const CaseStudyResult b = run_case_study(cfg, 5, Exec::Parallel);
  ASSERT_EQ(a.rows.size(), 2 * cfg.dispatch->N.size());
  ASSERT_EQ(a.summary.size(), cfg.dispatch->N.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].dro_value, b.rows[i].dro_value);
    EXPECT_EQ(a.rows[i].true_saa.mean, b.rows[i].true_saa.mean);
    EXPECT_LE(a.rows[i].saa_value, a.rows[i].dro_value + 1e-12);
  }
}
