#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamb/battery.hpp"
#include "dynamb/dispatch.hpp"
#include "dynamb/distributions.hpp"
#include "dynamb/radius.hpp"
#include "dynamb/system.hpp"

namespace dynamb {

using Json = nlohmann::json;

enum class SplitPolicy { Optimal, Equal };

// Realization i draws its measurement noise from classes[i % size]; every
// output coordinate uses the same scalar law.
struct MeasurementNoise {
  std::vector<GaussianMixture1D> classes;

  const GaussianMixture1D& for_realization(long i) const;
  // Envelope over classes: smallest m_v, largest M_v and C_v.
  NoiseNormBounds envelope(double p) const;
};

// Everything needed to generate realizations and certify a radius. States
// are deviations from the nominal trajectory when the scenario comes from
// battery cells.
struct Scenario {
  LTVSystem sys;
  ObserverDesign obs;
  FilterCovariances filter;
  CompactDistribution initial;                 // true law of xi_0
  std::optional<CompactDistribution> process;  // law of w_k; absent when q = 0
  MeasurementNoise measurement;
  NoiseModel noise;  // envelope bounds, rho_xi0 and rho_w from the declared supports
  int ell = 0;
  double p = 2.0;
  RadiusOptions radius;
  SplitPolicy split = SplitPolicy::Optimal;
  std::vector<BatteryCell> cells;  // empty for plain systems
};

struct CoverageSettings {
  double beta = 0.1;
  long N = 20;
  int trials = 200;
  int reference_samples = 10000;
  std::optional<double> psi_override;  // falsification controls
};

struct RadiusTableSettings {
  std::vector<long> N;
  std::vector<double> beta;
};

struct DispatchSettings {
  std::vector<Generator> generators;
  std::vector<double> cost_alpha;
  std::vector<double> cost_beta;
  double demand = 0.0;
  double penalty = 1.0;
  std::vector<long> N;
  std::vector<double> radii;  // one per N
  int realizations = 100;
  int true_samples = 10000;
};

struct StudyConfig {
  std::string name;
  Scenario scenario;
  RadiusTableSettings radius_table;
  CoverageSettings coverage;
  std::optional<DispatchSettings> dispatch;
};

// Strict parsing: unknown keys, wrong types and missing required keys raise
// ErrorKind::Config naming the JSON path.
StudyConfig parse_study(const Json& doc);

// Reads the file, applies "a.b.c=value" overrides (value parsed as JSON,
// falling back to a string), then parses. Syntax errors report line and column.
StudyConfig load_study(const std::string& path, const std::vector<std::string>& overrides = {});

Json read_json_file(const std::string& path);
void apply_override(Json& doc, const std::string& assignment);

}  // namespace dynamb
