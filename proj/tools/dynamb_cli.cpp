#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dynamb/case_study.hpp"
#include "dynamb/error.hpp"
#include "dynamb/montecarlo.hpp"
#include "dynamb/parallel.hpp"
#include "dynamb/scenario.hpp"
#include "dynamb/wasserstein.hpp"

namespace fs = std::filesystem;
using namespace dynamb;

namespace {

// Whitespace-separated columns, one header row.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  template <typename... T>
  void row(const T&... cells) {
    std::ostringstream os;
    os << std::setprecision(17);
    bool first = true;
    ((os << (first ? "" : " ") << cells, first = false), ...);
    rows_.push_back(os.str());
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? " " : "") + header_[i];
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

// Readers never see a half-written file: write beside the target, then rename.
void write_atomic(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string eta_string(const std::vector<int>& eta) {
  std::string s;
  for (int e : eta) s += e ? '1' : '0';
  return s.empty() ? "-" : s;
}

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  int jobs = 0;
  std::vector<std::string> sets;
};

StudyConfig load(const Common& c) { return load_study(c.config, c.sets); }

void cmd_radius_table(const Common& c) {
  const StudyConfig cfg = load(c);
  const Scenario& sc = cfg.scenario;
  if (cfg.radius_table.N.empty()) throw Error(ErrorKind::Config, "radius.table_N is empty");
  if (cfg.radius_table.beta.empty()) throw Error(ErrorKind::Config, "radius.table_beta is empty");
  const TransitionProducts tp(sc.sys, sc.obs, sc.ell);
  Table t({"N", "beta", "beta_nom", "beta_ns", "eps_nominal", "eps_noise", "psi", "rho_xi_ell",
           "Mw", "Mv", "R", "nominal_dim"});
  for (long N : cfg.radius_table.N) {
    for (double beta : cfg.radius_table.beta) {
      const RadiusBreakdown b = scenario_radius(sc, tp, N, beta);
      t.row(N, beta, b.split.beta_nom, b.split.beta_ns, b.eps_nominal, b.eps_noise, b.psi_total,
            b.rho_xi_ell, b.frak.Mw, b.frak.Mv, b.frak.R, b.nominal_dim);
    }
  }
  write_atomic(fs::path(c.out) / "radius_table.txt", t.str());
}

void cmd_coverage(const Common& c) {
  const StudyConfig cfg = load(c);
  const CoverageSummary s = coverage_experiment(cfg.scenario, cfg.coverage, c.seed);
  Table trials({"trial", "W_emp_est", "W_est_ref", "psi", "covered", "lemma_rhs"});
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    const TrialResult& r = s.trials[i];
    trials.row(i, r.W_emp_est, r.W_est_ref, r.psi, r.covered ? 1 : 0, r.lemma_rhs);
  }
  Table sum({"seed", "N", "beta", "trials", "psi", "eps_nominal", "eps_noise", "fraction", "floor",
             "lemma_violations"});
  sum.row(c.seed, cfg.coverage.N, cfg.coverage.beta, s.trials.size(), s.psi, s.radius.eps_nominal,
          s.radius.eps_noise, s.fraction, s.floor, s.lemma_violations);
  write_atomic(fs::path(c.out) / "coverage_trials.txt", trials.str());
  write_atomic(fs::path(c.out) / "coverage_summary.txt", sum.str());
  std::cout << "coverage " << s.fraction << " floor " << s.floor << " psi " << s.psi << '\n';
}

void cmd_dispatch(const Common& c) {
  const StudyConfig cfg = load(c);
  const CaseStudyResult res = run_case_study(cfg, c.seed);
  Table rows({"seed", "realization", "N", "radius", "saa_value", "dro_value", "true_saa", "true_saa_se",
              "true_dro", "true_dro_se", "dro_covers", "saa_overpromises", "eta_saa", "eta_dro"});
  for (const CaseStudyRow& r : res.rows) {
    rows.row(c.seed, r.realization, r.N, r.radius, r.saa_value, r.dro_value, r.true_saa.mean,
             r.true_saa.std_error, r.true_dro.mean, r.true_dro.std_error, r.dro_covers() ? 1 : 0,
             r.saa_overpromises() ? 1 : 0, eta_string(r.eta_saa), eta_string(r.eta_dro));
  }
  Table sum({"N", "radius", "dro_guarantee_rate", "saa_overpromise_rate"});
  for (const CaseStudySummary& s : res.summary) {
    sum.row(s.N, s.radius, s.dro_guarantee_rate, s.saa_overpromise_rate);
    std::cout << "N " << s.N << " radius " << s.radius << " dro_guarantee " << s.dro_guarantee_rate
              << " saa_overpromise " << s.saa_overpromise_rate << '\n';
  }
  write_atomic(fs::path(c.out) / "dispatch_rows.txt", rows.str());
  write_atomic(fs::path(c.out) / "dispatch_summary.txt", sum.str());
}

void cmd_ot_selftest(const Common& c, int cases) {
  Table t({"case", "N", "d", "p", "solver", "brute_force", "abs_diff"});
  int bad = 0;
  const auto results = ot_selftest(cases, c.seed);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double diff = std::abs(r.solver - r.brute);
    if (!(diff <= 1e-9)) ++bad;
    t.row(i, r.N, r.d, r.p, r.solver, r.brute, diff);
  }
  write_atomic(fs::path(c.out) / "ot_selftest.txt", t.str());
  std::cout << "ot-selftest " << results.size() - bad << "/" << results.size() << " within 1e-9\n";
  if (bad) throw Error(ErrorKind::Solver, std::to_string(bad) + " transport cases disagree with brute force");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein ambiguity radii for estimated states: tables, coverage, dispatch"};
  app.require_subcommand(1);
  Common c;
  int cases = 500;

  auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_seed) {
    auto* cfg = sub->add_option("--config", c.config, "study configuration (JSON)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    auto* seed = sub->add_option("--seed", c.seed, "root seed");
    if (needs_seed) seed->required();
    sub->add_option("--jobs", c.jobs, "worker threads (0 keeps the OpenMP default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--set", c.sets, "override key=value, dotted keys (repeatable)");
  };
  auto* radius = app.add_subcommand("radius-table", "psi_N over the configured N and beta grid");
  add_common(radius, true, false);
  auto* coverage = app.add_subcommand("coverage", "coverage experiment against a reference sample");
  add_common(coverage, true, true);
  auto* dispatch = app.add_subcommand("dispatch", "DRO vs SAA economic dispatch case study");
  add_common(dispatch, true, true);
  auto* ot = app.add_subcommand("ot-selftest", "exact transport vs permutation brute force");
  add_common(ot, false, true);
  ot->add_option("--cases", cases, "random instances")->capture_default_str()->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error kind=usage message=" << std::quoted(std::string(e.what())) << '\n';
    return 2;
  }

  try {
    set_jobs(c.jobs);
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + c.out + ": " + ec.message());
    if (radius->parsed()) cmd_radius_table(c);
    else if (coverage->parsed()) cmd_coverage(c);
    else if (dispatch->parsed()) cmd_dispatch(c);
    else if (ot->parsed()) cmd_ot_selftest(c, cases);
  } catch (const Error& e) {
    std::cerr << "error kind=" << to_string(e.kind()) << " message=" << std::quoted(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=" << std::quoted(e.what()) << '\n';
    return 3;
  }
  return 0;
}
