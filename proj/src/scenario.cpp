#include "dynamb/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dynamb/error.hpp"

namespace dynamb {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Config, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Object view that remembers which keys were read so leftovers can be
// rejected.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(child(key), "missing required key");
    return j_.at(key);
  }

  const Json* opt(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return nullptr;
    return &j_.at(key);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double num(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec vec(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

template <class T, class F>
std::vector<T> list(const Json& j, const std::string& path, F item) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Row-major nested arrays, or {"diag": [...]}.
Mat matrix(const Json& j, const std::string& path) {
  if (j.is_object()) {
    Reader r(j, path);
    const Vec d = vec(r.at("diag"), r.child("diag"));
    r.finish();
    return d.asDiagonal();
  }
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    const Vec row = vec(j[i], rp);
    if (static_cast<std::size_t>(row.size()) != cols) fail(rp, "ragged matrix row");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

// number -> point mass, [lo, hi] -> uniform, {"mixture": [[w, lo, hi], ...]}.
Marginal marginal(const Json& j, const std::string& path) {
  if (j.is_number()) return Marginal::point(j.get<double>());
  if (j.is_array()) {
    const Vec v = vec(j, path);
    if (v.size() != 2) fail(path, "interval must be [lo, hi]");
    return Marginal::uniform(v(0), v(1));
  }
  Reader r(j, path);
  Marginal m;
  const std::string mp = r.child("mixture");
  for (const Vec& part : list<Vec>(r.at("mixture"), mp, vec)) {
    if (part.size() != 3) fail(mp, "mixture part must be [weight, lo, hi]");
    m.weights.push_back(part(0));
    m.parts.push_back({part(1), part(2)});
  }
  r.finish();
  return m;
}

CompactDistribution distribution(const Json& j, const std::string& path) {
  Reader r(j, path);
  std::vector<double> weights;
  std::vector<CompactDistribution> parts;
  const std::string cp = r.child("components");
  const Json& comps = r.at("components");
  if (!comps.is_array() || comps.empty()) fail(cp, "expected a non-empty array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string ip = cp + "[" + std::to_string(i) + "]";
    Reader c(comps[i], ip);
    const Json* w = c.opt("weight");
    weights.push_back(w ? num(*w, c.child("weight")) : 1.0);
    parts.push_back(CompactDistribution::product(list<Marginal>(c.at("coords"), c.child("coords"), marginal)));
    c.finish();
  }
  r.finish();
  return parts.size() == 1 && weights[0] == 1.0 ? parts[0] : CompactDistribution::mixture(weights, parts);
}

GaussianMixture1D gaussian_mixture(const Json& j, const std::string& path) {
  return GaussianMixture1D(list<GaussianComponent>(j, path, [](const Json& c, const std::string& p) {
    Reader r(c, p);
    GaussianComponent g;
    g.weight = num(r.at("weight"), r.child("weight"));
    g.mean = num(r.at("mean"), r.child("mean"));
    g.sd = num(r.at("sd"), r.child("sd"));
    r.finish();
    return g;
  }));
}

struct Box {
  Vec lo, hi;
};

Box box(const Json& j, const std::string& path) {
  Reader r(j, path);
  Box b{vec(r.at("lo"), r.child("lo")), vec(r.at("hi"), r.child("hi"))};
  r.finish();
  if (b.lo.size() != b.hi.size() || b.lo.size() == 0) fail(path, "lo and hi must be equally long and non-empty");
  if ((b.lo.array() > b.hi.array()).any()) fail(path, "lo must not exceed hi");
  return b;
}

// Declared support box plus the true law, which must lie inside it.
struct SupportedLaw {
  Box support;
  CompactDistribution law;
};

SupportedLaw supported_law(const Json& j, const std::string& path) {
  Reader r(j, path);
  SupportedLaw s{box(r.at("support"), r.child("support")), distribution(r.at("law"), r.child("law"))};
  r.finish();
  if (s.law.dim() != s.support.lo.size()) fail(path, "law and support dimensions differ");
  if ((s.law.lower().array() < s.support.lo.array() - 1e-12).any() ||
      (s.law.upper().array() > s.support.hi.array() + 1e-12).any()) {
    fail(path, "law is not contained in the declared support");
  }
  return s;
}

double half_diameter(const Box& b) { return 0.5 * (b.hi - b.lo).maxCoeff(); }

BatteryCell cell(const Json& j, const std::string& path, int& count) {
  Reader r(j, path);
  BatteryCell c;
  count = static_cast<int>(integer(r.at("count"), r.child("count")));
  c.R1 = num(r.at("R1"), r.child("R1"));
  c.R2 = num(r.at("R2"), r.child("R2"));
  c.dt = num(r.at("dt"), r.child("dt"));
  c.C = BatteryCell::capacitance_for(num(r.at("a"), r.child("a")), c.dt, c.R2);
  c.Q = c.dt / num(r.at("dt_over_Q"), r.child("dt_over_Q"));
  c.alpha = num(r.at("alpha"), r.child("alpha"));
  c.beta = num(r.at("beta"), r.child("beta"));
  c.current = num(r.at("current"), r.child("current"));
  c.chi_star0 = vec(r.at("chi_star0"), r.child("chi_star0"));
  r.finish();
  if (count < 1) fail(r.child("count"), "must be >= 1");
  try {
    c.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return c;
}

DispatchSettings dispatch_settings(const Json& j, const std::string& path, int n_batteries) {
  Reader r(j, path);
  DispatchSettings d;
  d.generators = list<Generator>(r.at("generators"), r.child("generators"), [](const Json& g, const std::string& p) {
    Reader gr(g, p);
    Generator out;
    out.quad = num(gr.at("quad"), gr.child("quad"));
    out.center = num(gr.at("center"), gr.child("center"));
    out.pmin = num(gr.at("pmin"), gr.child("pmin"));
    out.pmax = num(gr.at("pmax"), gr.child("pmax"));
    gr.finish();
    return out;
  });
  d.cost_alpha = list<double>(r.at("cost_alpha"), r.child("cost_alpha"), num);
  d.cost_beta = list<double>(r.at("cost_beta"), r.child("cost_beta"), num);
  d.demand = num(r.at("demand"), r.child("demand"));
  d.penalty = num(r.at("penalty"), r.child("penalty"));
  d.N = list<long>(r.at("N"), r.child("N"), integer);
  d.radii = list<double>(r.at("radii"), r.child("radii"), num);
  d.realizations = static_cast<int>(integer(r.at("realizations"), r.child("realizations")));
  d.true_samples = static_cast<int>(integer(r.at("true_samples"), r.child("true_samples")));
  r.finish();
  if (static_cast<int>(d.cost_alpha.size()) != n_batteries || static_cast<int>(d.cost_beta.size()) != n_batteries) {
    fail(path, "cost_alpha and cost_beta need one entry per battery");
  }
  if (d.N.empty() || d.N.size() != d.radii.size()) fail(path, "N and radii must be non-empty and equally long");
  if (d.realizations < 1 || d.true_samples < 1) fail(path, "realizations and true_samples must be >= 1");
  return d;
}

}  // namespace

const GaussianMixture1D& MeasurementNoise::for_realization(long i) const {
  if (classes.empty()) throw Error(ErrorKind::Config, "no measurement noise classes");
  return classes[static_cast<std::size_t>(i) % classes.size()];
}

NoiseNormBounds MeasurementNoise::envelope(double p) const {
  if (classes.empty()) throw Error(ErrorKind::Config, "no measurement noise classes");
  NoiseNormBounds env = noise_bounds_from_mixture(classes[0], p);
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const NoiseNormBounds b = noise_bounds_from_mixture(classes[i], p);
    env.m_v = std::min(env.m_v, b.m_v);
    env.M_v = std::max(env.M_v, b.M_v);
    env.C_v = std::max(env.C_v, b.C_v);
  }
  env.validate();
  return env;
}

StudyConfig parse_study(const Json& doc) {
  Reader root(doc, "");
  const Json* name_j = root.opt("name");
  const std::string name = name_j ? text(*name_j, "name") : "scenario";
  const int ell = static_cast<int>(integer(root.at("ell"), "ell"));
  const double p = num(root.at("p"), "p");
  if (ell < 0) fail("ell", "must be >= 0");
  if (!(p >= 1.0)) fail("p", "must be >= 1");

  // System: explicit matrices, or stacked battery deviations.
  std::vector<BatteryCell> cells;
  std::optional<LTVSystem> sys;
  Vec offset;
  const Json* sys_j = root.opt("system");
  const Json* cells_j = root.opt("cells");
  if ((sys_j != nullptr) == (cells_j != nullptr)) fail("", "exactly one of 'system' and 'cells' is required");
  try {
    if (sys_j) {
      Reader r(*sys_j, "system");
      const Mat A = matrix(r.at("A"), "system.A");
      const Mat H = matrix(r.at("H"), "system.H");
      const Json* g = r.opt("G");
      const Mat G = g ? matrix(*g, "system.G") : Mat::Zero(A.rows(), 0);
      r.finish();
      sys = LTVSystem::time_invariant(A, G, H, ell);
    } else {
      int count = 0;
      const BatteryCell c = cell(*cells_j, "cells", count);
      cells.assign(static_cast<std::size_t>(count), c);
      sys = battery_error_system(cells, ell);
      offset.resize(2 * count);
      for (int i = 0; i < count; ++i) offset.segment(2 * i, 2) = c.chi_star0;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(sys_j ? "system" : "cells", e.what());
  }
  const int d = sys->d(), q = sys->q(), r = sys->r();

  Reader fr(root.at("filter"), "filter");
  FilterCovariances filter{matrix(fr.at("process"), "filter.process"), matrix(fr.at("measurement"), "filter.measurement")};
  fr.finish();
  if (filter.process.rows() != d || filter.process.cols() != d) fail("filter.process", "must be d x d");
  if (filter.measurement.rows() != r || filter.measurement.cols() != r) fail("filter.measurement", "must be r x r");

  SupportedLaw init = supported_law(root.at("initial"), "initial");
  if (init.law.dim() != d) fail("initial", "dimension must equal d");
  if (offset.size() > 0) init.law = init.law.shifted(offset);

  std::optional<CompactDistribution> process;
  double rho_w = 0.0;
  if (const Json* pj = root.opt("process_noise")) {
    SupportedLaw w = supported_law(*pj, "process_noise");
    if (w.law.dim() != q) fail("process_noise", "dimension must equal q");
    rho_w = half_diameter(w.support);
    process = w.law;
  } else if (q > 0) {
    fail("process_noise", "required when G has columns");
  }

  MeasurementNoise meas{list<GaussianMixture1D>(root.at("measurement_noise"), "measurement_noise", gaussian_mixture)};
  if (meas.classes.empty()) fail("measurement_noise", "need at least one noise class");

  RadiusOptions ropt;
  SplitPolicy split = SplitPolicy::Optimal;
  RadiusTableSettings table;
  if (const Json* rj = root.opt("radius")) {
    Reader rr(*rj, "radius");
    if (const Json* n = rr.opt("nominal")) {
      const std::string s = text(*n, "radius.nominal");
      if (s == "explicit") ropt.nominal = NominalRule::Explicit;
      else if (s == "single_exponential") ropt.nominal = NominalRule::SingleExponential;
      else if (s == "generic") ropt.nominal = NominalRule::Generic;
      else fail("radius.nominal", "expected explicit, single_exponential or generic");
    }
    if (const Json* s = rr.opt("support_rule")) {
      const std::string v = text(*s, "radius.support_rule");
      if (v == "infinity") ropt.support = SupportRule::InfinityNorm;
      else if (v == "spectral") ropt.support = SupportRule::Spectral;
      else fail("radius.support_rule", "expected infinity or spectral");
    }
    if (const Json* c = rr.opt("c_prime")) ropt.c_prime = num(*c, "radius.c_prime");
    const Json* cj = rr.opt("C");
    const Json* smallc = rr.opt("c");
    if ((cj != nullptr) != (smallc != nullptr)) fail("radius", "C and c must be given together");
    if (cj) ropt.user_constants = NominalConstants::from_C(num(*cj, "radius.C"), num(*smallc, "radius.c"));
    if (ropt.nominal == NominalRule::Generic && !ropt.user_constants) fail("radius", "generic rule needs C and c");
    if (const Json* s = rr.opt("split")) {
      const std::string v = text(*s, "radius.split");
      if (v == "optimal") split = SplitPolicy::Optimal;
      else if (v == "equal") split = SplitPolicy::Equal;
      else fail("radius.split", "expected optimal or equal");
    }
    if (const Json* t = rr.opt("table_N")) table.N = list<long>(*t, "radius.table_N", integer);
    if (const Json* t = rr.opt("table_beta")) table.beta = list<double>(*t, "radius.table_beta", num);
    rr.finish();
  }

  CoverageSettings cov;
  if (const Json* cj = root.opt("coverage")) {
    Reader cr(*cj, "coverage");
    if (const Json* v = cr.opt("beta")) cov.beta = num(*v, "coverage.beta");
    if (const Json* v = cr.opt("N")) cov.N = integer(*v, "coverage.N");
    if (const Json* v = cr.opt("trials")) cov.trials = static_cast<int>(integer(*v, "coverage.trials"));
    if (const Json* v = cr.opt("reference_samples")) cov.reference_samples = static_cast<int>(integer(*v, "coverage.reference_samples"));
    if (const Json* v = cr.opt("psi_override")) cov.psi_override = num(*v, "coverage.psi_override");
    cr.finish();
    if (!(cov.beta > 0.0 && cov.beta < 1.0)) fail("coverage.beta", "must lie in (0,1)");
    if (cov.N < 1 || cov.trials < 1 || cov.reference_samples < 1) fail("coverage", "N, trials and reference_samples must be >= 1");
  }

  std::optional<DispatchSettings> disp;
  if (const Json* dj = root.opt("dispatch")) {
    if (cells.empty()) fail("dispatch", "needs a battery scenario ('cells')");
    disp = dispatch_settings(*dj, "dispatch", static_cast<int>(cells.size()));
  }
  root.finish();

  ObserverDesign obs = [&] {
    try {
      return design_gain_time_invariant(*sys, filter);
    } catch (const Error& e) {
      fail("filter", e.what());
    }
  }();
  NoiseModel noise{meas.envelope(p), half_diameter(init.support), rho_w};

  return StudyConfig{
      name,
      Scenario{*sys, obs, filter, init.law, process, meas, noise, ell, p, ropt, split, cells},
      table, cov, disp};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte, body.size());
    const long line = 1 + std::count(body.begin(), body.begin() + static_cast<long>(at), '\n');
    const std::size_t nl = body.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t col = nl == std::string::npos ? at : at - nl - 1;
    throw Error(ErrorKind::Config, path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "override must be key=value: " + assignment);
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  std::string pointer;
  std::stringstream ks(key);
  for (std::string part; std::getline(ks, part, '.');) {
    if (part.empty()) throw Error(ErrorKind::Config, "empty path component in override " + key);
    pointer += "/" + part;
  }
  // Unknown keys still fail later in strict parsing.
  doc[Json::json_pointer(pointer)] = value;
}

StudyConfig load_study(const std::string& path, const std::vector<std::string>& overrides) {
  Json doc = read_json_file(path);
  for (const std::string& o : overrides) apply_override(doc, o);
  return parse_study(doc);
}

}  // namespace dynamb
