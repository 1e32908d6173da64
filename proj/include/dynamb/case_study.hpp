#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynamb/dispatch.hpp"
#include "dynamb/parallel.hpp"
#include "dynamb/scenario.hpp"

namespace dynamb {

DispatchProblem make_dispatch_problem(const StudyConfig& cfg, DiscreteMeasure center, double radius);

struct CaseStudyRow {
  int realization = 0;
  long N = 0;
  double radius = 0.0;
  double saa_value = 0.0;
  double dro_value = 0.0;
  CostEstimate true_saa;
  CostEstimate true_dro;
  std::vector<int> eta_saa;
  std::vector<int> eta_dro;

  bool dro_covers() const { return dro_value >= true_dro.mean; }
  bool saa_overpromises() const { return saa_value < true_saa.mean; }
};

struct CaseStudySummary {
  long N = 0;
  double radius = 0.0;
  double dro_guarantee_rate = 0.0;
  double saa_overpromise_rate = 0.0;
};

struct CaseStudyResult {
  std::vector<CaseStudyRow> rows;  // realization-major, then N in config order
  std::vector<CaseStudySummary> summary;
};

// Realization r draws its samples from trial stream r; the N-sample sets are
// nested prefixes of one another. True costs share one sample set of size
// true_samples drawn from the reference stream.
CaseStudyResult run_case_study(const StudyConfig& cfg, std::uint64_t seed,
                               Exec exec = Exec::Parallel);

}  // namespace dynamb
