#pragma once
// Config-driven experiment runner: parses a strict JSON scenario description,
// integrates the requested systems, computes the requested analyses, evaluates
// frozen pass/fail checks, and writes byte-deterministic CSV outputs plus a
// hashed manifest and a machine-readable acceptance report.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdlab/comparison.hpp"
#include "bdlab/diagnostics.hpp"
#include "bdlab/integrator.hpp"
#include "bdlab/io.hpp"
#include "bdlab/model.hpp"
#include "bdlab/selfsim.hpp"

namespace bdlab {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------
struct ModelConfig {
  double lambda = 1.0;
  double kappa = 1.0;
  double k_on = 0.0;
};

enum class InitialKind { Monodisperse, ExplicitFile, EquilibriumLadder };

struct InitialConfig {
  InitialKind kind = InitialKind::Monodisperse;
  std::size_t n0 = 1;       // monodisperse: cluster size carrying the mass
  double amount = 1.0;      // monodisperse: concentration at n0
  double f0 = 0.0;
  std::string path;         // explicit-file: CSV with rows n,c_n
  double z = 0.5;           // equilibrium-ladder seed c_n = scale * Q_n z^n
  double scale = 1.0;
};

struct TruncationConfig {
  std::size_t n = 1000;
  TruncationPolicy policy = TruncationPolicy::Reflecting;
};

struct ScheduleConfig {
  std::vector<double> times;  // resolved list (geometric expanded at parse)
};

struct DiagnosticsConfig {
  bool enabled = false;
  std::vector<std::string> series;   // f, mass, g_sum, moment:<p>, qk:<k>, cn_max:<n>
  double sample_dt = 0.0;            // 0: sample at schedule times only
  std::vector<double> sample_times;  // optional explicit grid (overrides sample_dt)
};

struct ComparisonConfig {
  bool enabled = false;
  bool energies = false;  // Lyapunov / flux-energy series on the diffusion side
};

struct SelfsimConfig {
  bool enabled = false;
  double m_end = 5.0;
  std::vector<double> times;     // rescaling times (defaults to the schedule)
  std::vector<double> s_values{1.0};
  std::vector<ProfileNorm> norms{ProfileNorm::Sup, ProfileNorm::L1, ProfileNorm::L2};
};

struct PhiConfig {
  bool enabled = false;
  std::vector<std::size_t> l_list{1};
  std::vector<double> times;
  std::size_t n = 0;  // 0: use the truncation size
  double rel_tol = 1e-7;
};

struct DuhamelConfig {
  bool enabled = false;
  double t = 5.0;
  double history_dt = 1e-3;
  double rel_tol_prop = 1e-7;
};

struct OutputConfig {
  std::size_t snapshot_stride = 1;  // write every k-th cluster row; 0 = no snapshot files
};

struct CheckSpec {
  std::string name;
  std::string kind;
  json params;  // kind-specific
};

struct ExperimentConfig {
  std::string name;
  ModelConfig model;
  InitialConfig initial;
  TruncationConfig truncation;
  IntegratorConfig integrator;
  Method method_requested = Method::Auto;
  ScheduleConfig schedule;
  DiagnosticsConfig diagnostics;
  ComparisonConfig comparison;
  SelfsimConfig selfsim;
  PhiConfig phi;
  DuhamelConfig duhamel;
  OutputConfig output;
  std::vector<CheckSpec> checks;
  json echo;  // the parsed source document, embedded in the manifest
};

// --- strict parsing helpers -------------------------------------------------
namespace cfgdetail {

inline void require_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path + ": unknown key '" + it.key() + "'");
  }
}

inline double get_num(const json& j, const std::string& path, const char* key,
                      std::optional<double> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(path + ": missing required key '" + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::size_t get_size(const json& j, const std::string& path, const char* key,
                            std::optional<std::size_t> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(path + ": missing required key '" + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ConfigError(path + "." + key + ": expected a nonnegative integer");
  const auto iv = v.get<long long>();
  if (iv < 0) throw ConfigError(path + "." + key + ": expected a nonnegative integer");
  return static_cast<std::size_t>(iv);
}

inline std::string get_str(const json& j, const std::string& path, const char* key,
                           std::optional<std::string> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(path + ": missing required key '" + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> get_num_list(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ConfigError(path + ": missing array '" + key + "'");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline TruncationPolicy parse_policy(const std::string& s, const std::string& path) {
  if (s == "reflecting") return TruncationPolicy::Reflecting;
  if (s == "absorbing") return TruncationPolicy::Absorbing;
  throw ConfigError(path + ": policy must be 'reflecting' or 'absorbing'");
}

inline Method parse_method(const std::string& s, const std::string& path) {
  if (s == "auto") return Method::Auto;
  if (s == "explicit-adaptive") return Method::ExplicitAdaptive;
  if (s == "imex") return Method::Imex;
  throw ConfigError(path + ": method must be 'auto', 'explicit-adaptive' or 'imex'");
}

inline ProfileNorm parse_norm(const std::string& s, const std::string& path) {
  if (s == "sup") return ProfileNorm::Sup;
  if (s == "L1") return ProfileNorm::L1;
  if (s == "L2") return ProfileNorm::L2;
  if (s == "Lp") return ProfileNorm::Lp;
  throw ConfigError(path + ": norm must be one of sup, L1, L2, Lp");
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const json& j) {
  using namespace cfgdetail;
  ExperimentConfig c;
  c.echo = j;
  require_keys(j, "$", {"name", "model", "initial", "truncation", "integrator", "schedule",
                        "analyses", "output", "checks"});
  c.name = get_str(j, "$", "name");

  const auto& jm = j.at("model");
  require_keys(jm, "model", {"lambda", "kappa", "k_on"});
  c.model.lambda = get_num(jm, "model", "lambda");
  c.model.kappa = get_num(jm, "model", "kappa");
  c.model.k_on = get_num(jm, "model", "k_on", 0.0);

  const auto& ji = j.at("initial");
  const std::string ikind = get_str(ji, "initial", "type");
  if (ikind == "monodisperse") {
    require_keys(ji, "initial", {"type", "n0", "amount", "f0"});
    c.initial.kind = InitialKind::Monodisperse;
    c.initial.n0 = get_size(ji, "initial", "n0", std::size_t{1});
    c.initial.amount = get_num(ji, "initial", "amount");
    c.initial.f0 = get_num(ji, "initial", "f0");
  } else if (ikind == "explicit-file") {
    require_keys(ji, "initial", {"type", "path", "f0"});
    c.initial.kind = InitialKind::ExplicitFile;
    c.initial.path = get_str(ji, "initial", "path");
    c.initial.f0 = get_num(ji, "initial", "f0");
  } else if (ikind == "equilibrium-ladder") {
    require_keys(ji, "initial", {"type", "z", "scale", "f0"});
    c.initial.kind = InitialKind::EquilibriumLadder;
    c.initial.z = get_num(ji, "initial", "z");
    c.initial.scale = get_num(ji, "initial", "scale");
    c.initial.f0 = get_num(ji, "initial", "f0");
  } else {
    throw ConfigError("initial.type: unknown type '" + ikind + "'");
  }

  const auto& jt = j.at("truncation");
  require_keys(jt, "truncation", {"n", "policy"});
  c.truncation.n = get_size(jt, "truncation", "n");
  c.truncation.policy = parse_policy(get_str(jt, "truncation", "policy", "reflecting"), "truncation");

  if (j.contains("integrator")) {
    const auto& jg = j.at("integrator");
    require_keys(jg, "integrator", {"method", "rel_tol", "abs_tol", "max_step", "min_step",
                                    "negativity", "initial_step"});
    c.method_requested = parse_method(get_str(jg, "integrator", "method", "auto"), "integrator");
    c.integrator.method = c.method_requested;
    c.integrator.rel_tol = get_num(jg, "integrator", "rel_tol", 1e-8);
    c.integrator.abs_tol = get_num(jg, "integrator", "abs_tol", 1e-12);
    c.integrator.max_step = get_num(jg, "integrator", "max_step", 50.0);
    c.integrator.min_step = get_num(jg, "integrator", "min_step", 1e-13);
    c.integrator.initial_step = get_num(jg, "integrator", "initial_step", 0.0);
    const std::string neg = get_str(jg, "integrator", "negativity", "clip-and-log");
    if (neg == "clip-and-log")
      c.integrator.negativity = NegativityPolicy::ClipAndLog;
    else if (neg == "reject-step")
      c.integrator.negativity = NegativityPolicy::RejectStep;
    else
      throw ConfigError("integrator.negativity: expected 'clip-and-log' or 'reject-step'");
  }

  const auto& js = j.at("schedule");
  const std::string skind = get_str(js, "schedule", "type");
  if (skind == "list") {
    require_keys(js, "schedule", {"type", "times"});
    c.schedule.times = get_num_list(js, "schedule", "times");
  } else if (skind == "geometric") {
    require_keys(js, "schedule", {"type", "t0", "factor", "count"});
    const double t0 = get_num(js, "schedule", "t0");
    const double factor = get_num(js, "schedule", "factor");
    const std::size_t count = get_size(js, "schedule", "count");
    double t = t0;
    for (std::size_t i = 0; i < count; ++i, t *= factor) c.schedule.times.push_back(t);
  } else {
    throw ConfigError("schedule.type: expected 'list' or 'geometric'");
  }
  if (c.schedule.times.empty()) throw ConfigError("schedule: must contain at least one time");
  for (std::size_t i = 0; i + 1 < c.schedule.times.size(); ++i)
    if (!(c.schedule.times[i] < c.schedule.times[i + 1]))
      throw ConfigError("schedule: times must be strictly increasing");

  if (j.contains("analyses")) {
    const auto& ja = j.at("analyses");
    require_keys(ja, "analyses",
                 {"diagnostics", "comparison", "selfsim", "fundamental_solution", "duhamel"});
    if (ja.contains("diagnostics")) {
      const auto& jd = ja.at("diagnostics");
      require_keys(jd, "analyses.diagnostics", {"series", "sample_dt", "sample_times"});
      c.diagnostics.enabled = true;
      if (jd.contains("series"))
        for (const auto& s : jd.at("series")) c.diagnostics.series.push_back(s.get<std::string>());
      c.diagnostics.sample_dt = get_num(jd, "analyses.diagnostics", "sample_dt", 0.0);
      if (jd.contains("sample_times"))
        c.diagnostics.sample_times = get_num_list(jd, "analyses.diagnostics", "sample_times");
    }
    if (ja.contains("comparison")) {
      const auto& jc = ja.at("comparison");
      require_keys(jc, "analyses.comparison", {"enabled", "energies"});
      c.comparison.enabled = jc.value("enabled", true);
      c.comparison.energies = jc.value("energies", false);
    }
    if (ja.contains("selfsim")) {
      const auto& jf = ja.at("selfsim");
      require_keys(jf, "analyses.selfsim", {"m_end", "times", "s_values", "norms"});
      c.selfsim.enabled = true;
      c.selfsim.m_end = get_num(jf, "analyses.selfsim", "m_end", 5.0);
      if (jf.contains("times")) c.selfsim.times = get_num_list(jf, "analyses.selfsim", "times");
      if (jf.contains("s_values"))
        c.selfsim.s_values = get_num_list(jf, "analyses.selfsim", "s_values");
      if (jf.contains("norms")) {
        c.selfsim.norms.clear();
        for (const auto& s : jf.at("norms"))
          c.selfsim.norms.push_back(cfgdetail::parse_norm(s.get<std::string>(), "analyses.selfsim.norms"));
      }
    }
    if (ja.contains("fundamental_solution")) {
      const auto& jp = ja.at("fundamental_solution");
      require_keys(jp, "analyses.fundamental_solution", {"l", "times", "n", "rel_tol"});
      c.phi.enabled = true;
      if (jp.contains("l")) {
        c.phi.l_list.clear();
        for (const auto& v : jp.at("l")) c.phi.l_list.push_back(v.get<std::size_t>());
      }
      c.phi.times = get_num_list(jp, "analyses.fundamental_solution", "times");
      c.phi.n = get_size(jp, "analyses.fundamental_solution", "n", std::size_t{0});
      c.phi.rel_tol = get_num(jp, "analyses.fundamental_solution", "rel_tol", 1e-7);
    }
    if (ja.contains("duhamel")) {
      const auto& jd = ja.at("duhamel");
      require_keys(jd, "analyses.duhamel", {"t", "history_dt", "rel_tol_prop"});
      c.duhamel.enabled = true;
      c.duhamel.t = get_num(jd, "analyses.duhamel", "t", 5.0);
      c.duhamel.history_dt = get_num(jd, "analyses.duhamel", "history_dt", 1e-3);
      c.duhamel.rel_tol_prop = get_num(jd, "analyses.duhamel", "rel_tol_prop", 1e-7);
    }
  }

  if (j.contains("output")) {
    const auto& jo = j.at("output");
    require_keys(jo, "output", {"snapshot_stride"});
    c.output.snapshot_stride = get_size(jo, "output", "snapshot_stride", std::size_t{1});
  }

  if (j.contains("checks")) {
    for (const auto& jc : j.at("checks")) {
      CheckSpec spec;
      spec.name = jc.at("name").get<std::string>();
      spec.kind = jc.at("kind").get<std::string>();
      spec.params = jc;
      c.checks.push_back(std::move(spec));
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Run artifacts and outcome
// ---------------------------------------------------------------------------
struct CheckResult {
  std::string name;
  std::string kind;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparator;  // "<=", ">=", "<"
  bool pass = false;
  std::string detail;
};

struct RunArtifacts {
  double rho0 = 0.0;
  std::vector<TrajectorySample> snapshots;                 // at schedule times
  std::vector<double> duhamel_tails0, duhamel_tails_end;   // tails at 0 and t_d
  std::vector<std::array<double, 5>> f_series;             // t, f, mass, drift, leaked
  std::map<std::string, DiagnosticSeries> series;
  std::map<double, std::vector<double>> tails_at;          // selfsim tail vectors
  std::vector<std::pair<double, double>> comparison_emax;  // (t, max_k E_k)
  DiagnosticSeries diff_lyapunov, diff_flux_energy;
  std::vector<PhiColumn> phi_columns;
  std::vector<double> duhamel_direct, duhamel_recon;
  // profiles: (time, s) -> profile and per-norm errors
  struct ProfileEntry {
    double t, s;
    RescaledProfile profile;
    std::map<std::string, double> errors;
  };
  std::vector<ProfileEntry> profiles;
  IntegrationStats stats;
  Method method_resolved = Method::Auto;
  double wall_seconds = 0.0;
  double max_abs_drift = 0.0;
};

struct RunOutcome {
  ExperimentConfig config;
  RunArtifacts art;
  std::vector<CheckResult> checks;
  bool all_checks_pass = true;
  bool solver_failed = false;
  std::string failure_message;
  std::vector<WrittenFile> files;
};

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------
inline SimState build_initial_state(const ExperimentConfig& cfg, const RateModel& model) {
  SimState s;
  s.c.assign(cfg.truncation.n, 0.0);
  s.f = cfg.initial.f0;
  switch (cfg.initial.kind) {
    case InitialKind::Monodisperse: {
      if (cfg.initial.n0 < 1 || cfg.initial.n0 > cfg.truncation.n)
        throw ConfigError("initial.n0 out of range");
      s.c[cfg.initial.n0 - 1] = cfg.initial.amount;
      break;
    }
    case InitialKind::ExplicitFile: {
      std::ifstream in(cfg.initial.path);
      if (!in) throw ConfigError("initial.path: cannot read " + cfg.initial.path);
      std::string line;
      std::getline(in, line);  // header n,c_n
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
          throw ConfigError("initial.path: malformed row '" + line + "'");
        const std::size_t n = std::stoull(line.substr(0, comma));
        const double v = std::stod(line.substr(comma + 1));
        if (n < 1 || n > cfg.truncation.n)
          throw ConfigError("initial.path: cluster size out of range in row '" + line + "'");
        s.c[n - 1] = v;
      }
      break;
    }
    case InitialKind::EquilibriumLadder: {
      auto lad = equilibrium_ladder(model, cfg.truncation.n);
      double zp = 1.0;
      for (std::size_t n = 1; n <= cfg.truncation.n; ++n) {
        zp *= cfg.initial.z;
        s.c[n - 1] = cfg.initial.scale * lad.Q[n - 1] * zp;
      }
      break;
    }
  }
  const double mass = total_mass(s);
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw ConfigError("initial data: total mass must be finite and positive");
  return s;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------
namespace rundetail {

inline bool contains_time(const std::vector<double>& sorted, double t) {
  return std::binary_search(sorted.begin(), sorted.end(), t);
}

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LinFit f;
  const double denom = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  const double num = n * sxy - sx * sy;
  f.r2 = num * num / (denom * (n * syy - sy * sy));
  return f;
}

}  // namespace rundetail

inline void run_simulation(const ExperimentConfig& cfg, RunArtifacts& art) {
  RateModel model(cfg.model.lambda, cfg.model.kappa, cfg.truncation.n, cfg.model.k_on);
  const SimState s0 = build_initial_state(cfg, model);
  art.rho0 = mass_with_ledger(s0);
  art.method_resolved = resolve_method(cfg.integrator, model.lambda(), cfg.truncation.n);

  // --- sampling plan: union of all requested time grids --------------------
  const std::vector<double>& snap_times = cfg.schedule.times;
  std::vector<double> diag_times = cfg.diagnostics.sample_times;
  if (diag_times.empty() && cfg.diagnostics.sample_dt > 0.0) {
    const double t_end = snap_times.back();
    for (double t = 0.0; t <= t_end * (1 + 1e-12); t += cfg.diagnostics.sample_dt)
      diag_times.push_back(t);
  }
  if (diag_times.empty()) diag_times = snap_times;

  std::vector<double> selfsim_times = cfg.selfsim.times.empty() ? snap_times : cfg.selfsim.times;
  std::vector<double> tails_times;
  if (cfg.selfsim.enabled)
    for (double tau : selfsim_times)
      for (double s : cfg.selfsim.s_values) tails_times.push_back(tau * s);
  std::sort(tails_times.begin(), tails_times.end());
  tails_times.erase(std::unique(tails_times.begin(), tails_times.end()), tails_times.end());

  std::vector<double> ghist_times;
  if (cfg.duhamel.enabled) {
    const double h = cfg.duhamel.history_dt;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.duhamel.t / h));
    for (std::size_t i = 0; i <= steps; ++i)
      ghist_times.push_back(cfg.duhamel.t * static_cast<double>(i) / static_cast<double>(steps));
  }

  std::vector<double> master;
  master.insert(master.end(), snap_times.begin(), snap_times.end());
  master.insert(master.end(), diag_times.begin(), diag_times.end());
  master.insert(master.end(), tails_times.begin(), tails_times.end());
  master.insert(master.end(), ghist_times.begin(), ghist_times.end());
  std::sort(master.begin(), master.end());
  master.erase(std::unique(master.begin(), master.end()), master.end());
  if (!master.empty() && master.front() < 0.0)
    throw ConfigError("schedule: negative times are not allowed");

  // --- evaluators for named diagnostic series ------------------------------
  struct SeriesEval {
    std::string name;
    std::function<double(const SimState&)> fn;
  };
  std::vector<SeriesEval> evals;
  for (const std::string& name : cfg.diagnostics.series) {
    if (name == "f") {
      evals.push_back({name, [](const SimState& s) { return s.f; }});
    } else if (name == "mass") {
      evals.push_back({name, [](const SimState& s) { return total_mass(s); }});
    } else if (name == "g_sum") {
      evals.push_back({name, [&model](const SimState& s) {
                         NeumaierSum acc;
                         for (double g : inhomogeneity(model, s)) acc.add(std::abs(g));
                         return acc.value();
                       }});
    } else if (name == "lyapunov") {
      evals.push_back({name, [&model](const SimState& s) { return lyapunov_energy(model, s); }});
    } else if (name == "flux_energy") {
      evals.push_back({name, [&model](const SimState& s) { return flux_energy(model, s); }});
    } else if (name.rfind("moment:", 0) == 0) {
      const double p = std::stod(name.substr(7));
      evals.push_back({name, [p](const SimState& s) { return moment(s, p); }});
    } else if (name.rfind("qk:", 0) == 0) {
      const std::size_t k = std::stoull(name.substr(3));
      evals.push_back({name, [k](const SimState& s) { return q_functional(s, k); }});
    } else if (name.rfind("cn_max:", 0) == 0) {
      const std::size_t nm = std::stoull(name.substr(7));
      evals.push_back({name, [nm](const SimState& s) {
                         double mx = 0.0;
                         for (std::size_t i = 0; i < std::min(nm, s.c.size()); ++i)
                           mx = std::max(mx, s.c[i]);
                         return mx;
                       }});
    } else {
      throw ConfigError("analyses.diagnostics.series: unknown series '" + name + "'");
    }
  }
  for (auto& ev : evals) art.series[ev.name] = DiagnosticSeries{ev.name, {}};

  TailHistory ghist;
  const auto wall0 = std::chrono::steady_clock::now();

  // --- main integration -----------------------------------------------------
  art.stats = integrate_cluster_observe(
      model, s0, cfg.integrator, master, cfg.truncation.policy,
      [&](double t, std::span<const double> y, double drift) {
        art.max_abs_drift = std::max(art.max_abs_drift, std::abs(drift));
        const std::size_t n = cfg.truncation.n;
        const bool want_snap = rundetail::contains_time(snap_times, t);
        const bool want_diag = rundetail::contains_time(diag_times, t);
        const bool want_tail = rundetail::contains_time(tails_times, t);
        const bool want_g = rundetail::contains_time(ghist_times, t);
        if (!(want_snap || want_diag || want_tail || want_g)) return;
        SimState s = detail::unpack_state(t, y);
        if (want_diag) {
          art.f_series.push_back({t, s.f, total_mass(s), drift, s.leaked_mass});
          for (auto& ev : evals) art.series[ev.name].add(t, ev.fn(s));
        }
        if (want_tail) art.tails_at[t] = tails(s);
        if (want_g) {
          ghist.times.push_back(t);
          ghist.values.push_back(inhomogeneity(model, s));
          if (t == ghist_times.front()) art.duhamel_tails0 = tails(s);
          if (t == ghist_times.back()) art.duhamel_tails_end = tails(s);
        }
        if (want_snap) art.snapshots.push_back({std::move(s), drift});
      });

  // --- comparison run --------------------------------------------------------
  if (cfg.comparison.enabled) {
    DiffusionState d0;
    d0.t = s0.t;
    d0.c = s0.c;
    DiffusionSystem sys(model, cfg.truncation.policy);
    std::vector<double> y0(d0.c.size() + 1, 0.0);
    std::copy(d0.c.begin(), d0.c.end(), y0.begin());
    std::size_t snap_idx = 0;
    integrate_observe(sys, y0, d0.t, cfg.integrator,
                      resolve_method(cfg.integrator, model.lambda(), cfg.truncation.n), master,
                      [&](double t, std::span<const double> y, double) {
                        std::span<const double> cdiff = y.first(cfg.truncation.n);
                        if (cfg.comparison.energies && rundetail::contains_time(diag_times, t)) {
                          art.diff_lyapunov.add(t, lyapunov_energy(model, cdiff));
                          art.diff_flux_energy.add(t, flux_energy(model, cdiff, cfg.truncation.policy));
                        }
                        if (rundetail::contains_time(snap_times, t)) {
                          // E_k against the matching full-system snapshot
                          while (snap_idx < art.snapshots.size() &&
                                 art.snapshots[snap_idx].state.t < t)
                            ++snap_idx;
                          if (snap_idx < art.snapshots.size() &&
                              art.snapshots[snap_idx].state.t == t) {
                            auto cf = tails(art.snapshots[snap_idx].state);
                            auto cd = tails(cdiff);
                            double emax = -1e300;
                            for (std::size_t i = 0; i < cf.size(); ++i)
                              emax = std::max(emax, cf[i] - cd[i]);
                            art.comparison_emax.emplace_back(t, emax);
                          }
                        }
                      });
  }

  // --- fundamental solution columns -------------------------------------------
  if (cfg.phi.enabled) {
    IntegratorConfig pcfg = cfg.integrator;
    pcfg.method = Method::Imex;
    pcfg.rel_tol = cfg.phi.rel_tol;
    const std::size_t pn = cfg.phi.n == 0 ? cfg.truncation.n : cfg.phi.n;
    for (std::size_t l : cfg.phi.l_list) {
      auto cols = fundamental_solution(l, cfg.phi.times, pn, pcfg);
      for (auto& col : cols) art.phi_columns.push_back(std::move(col));
    }
  }

  // --- Duhamel reconstruction -------------------------------------------------
  if (cfg.duhamel.enabled) {
    IntegratorConfig pcfg = cfg.integrator;
    pcfg.method = Method::Imex;
    pcfg.rel_tol = cfg.duhamel.rel_tol_prop;
    TailPropagator prop(cfg.truncation.n, pcfg);
    art.duhamel_direct = art.duhamel_tails_end;
    art.duhamel_recon = duhamel_reconstruct(prop, art.duhamel_tails0, ghist, cfg.duhamel.t);
  }

  // --- rescaled profiles -------------------------------------------------------
  if (cfg.selfsim.enabled) {
    for (double tau : selfsim_times) {
      for (double s : cfg.selfsim.s_values) {
        const double sim_t = tau * s;
        auto it = art.tails_at.find(sim_t);
        if (it == art.tails_at.end()) continue;
        RunArtifacts::ProfileEntry pe;
        pe.t = tau;
        pe.s = s;
        auto grid = default_x_grid(tau, cfg.selfsim.m_end);
        pe.profile = rescale(it->second, tau, s, grid);
        for (ProfileNorm nm : cfg.selfsim.norms)
          pe.errors[to_string(nm)] =
              profile_error(pe.profile, art.rho0, cfg.model.kappa, nm, cfg.selfsim.m_end);
        art.profiles.push_back(std::move(pe));
      }
    }
  }

  art.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------
inline CheckResult evaluate_check(const CheckSpec& spec, const ExperimentConfig& cfg,
                                  const RunArtifacts& art) {
  using namespace cfgdetail;
  CheckResult r;
  r.name = spec.name;
  r.kind = spec.kind;
  const json& p = spec.params;
  const std::string path = "checks." + spec.name;

  auto f_at = [&](double t) -> double {
    for (const auto& row : art.f_series)
      if (row[0] == t) return row[1];
    throw ConfigError(path + ": no f sample at t = " + format_double(t));
  };
  auto snapshot_at = [&](double t) -> const SimState& {
    for (const auto& smp : art.snapshots)
      if (smp.state.t == t) return smp.state;
    throw ConfigError(path + ": no snapshot at t = " + format_double(t));
  };

  if (spec.kind == "mass-drift-rel") {
    r.threshold = get_num(p, path, "max");
    r.comparator = "<=";
    r.measured = art.max_abs_drift / art.rho0;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "runtime") {
    r.threshold = get_num(p, path, "max_seconds");
    r.comparator = "<=";
    r.measured = art.wall_seconds;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "f-closed-form") {
    const double t_max = get_num(p, path, "t_max");
    r.threshold = get_num(p, path, "max_err");
    r.comparator = "<=";
    RateModel model(cfg.model.lambda, cfg.model.kappa, 2, cfg.model.k_on);
    double max_err = 0.0;
    for (const auto& row : art.f_series)
      if (row[0] <= t_max)
        max_err = std::max(max_err,
                           std::abs(row[1] - f_closed_form(model, art.rho0, cfg.initial.f0, row[0])));
    r.measured = max_err;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "f-limit") {
    const double t = get_num(p, path, "t");
    const double target = get_num(p, path, "target");
    r.threshold = get_num(p, path, "tol");
    r.comparator = "<=";
    r.measured = std::abs(f_at(t) - target);
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "f-monotone") {
    const std::string dir = get_str(p, path, "direction");
    r.threshold = get_num(p, path, "slack", 1e-9);
    r.comparator = "<=";
    double worst = 0.0;
    for (std::size_t i = 1; i < art.f_series.size(); ++i) {
      const double step = art.f_series[i][1] - art.f_series[i - 1][1];
      const double viol = dir == "nondecreasing" ? -step : step;
      worst = std::max(worst, viol);
    }
    r.measured = worst;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "f-gap-doubling") {
    const double limit = get_num(p, path, "limit");
    const auto times = get_num_list(p, path, "times");
    r.threshold = get_num(p, path, "max_ratio");
    r.comparator = "<=";
    double worst = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double g0 = std::abs(f_at(times[i - 1]) - limit);
      const double g1 = std::abs(f_at(times[i]) - limit);
      worst = std::max(worst, g1 / g0);
      r.detail += (r.detail.empty() ? "gaps " : ", ") + format_double(g0);
      if (i + 1 == times.size()) r.detail += ", " + format_double(g1);
    }
    r.measured = worst;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "cn-max-decreasing") {
    const auto times = get_num_list(p, path, "times");
    const std::size_t nmax = get_size(p, path, "n_max", std::size_t{10});
    r.threshold = 1.0;
    r.comparator = "<";
    double worst = 0.0;
    double prev = -1.0;
    for (double t : times) {
      const auto& s = snapshot_at(t);
      double mx = 0.0;
      for (std::size_t i = 0; i < std::min(nmax, s.c.size()); ++i) mx = std::max(mx, s.c[i]);
      if (prev >= 0.0) worst = std::max(worst, mx / prev);
      prev = mx;
    }
    r.measured = worst;
    r.pass = r.measured < r.threshold;
  } else if (spec.kind == "cn-max-final") {
    const double t = get_num(p, path, "t");
    const std::size_t nmax = get_size(p, path, "n_max", std::size_t{10});
    r.threshold = get_num(p, path, "max");
    r.comparator = "<=";
    const auto& s = snapshot_at(t);
    double mx = 0.0;
    for (std::size_t i = 0; i < std::min(nmax, s.c.size()); ++i) mx = std::max(mx, s.c[i]);
    r.measured = mx;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "comparison-Ek") {
    r.threshold = get_num(p, path, "max");
    r.comparator = "<=";
    double mx = -1e300;
    for (const auto& [t, e] : art.comparison_emax) mx = std::max(mx, e);
    r.measured = mx;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "series-nonincreasing") {
    const std::string sname = get_str(p, path, "series");
    r.threshold = get_num(p, path, "slack", 1e-10);
    r.comparator = "<=";
    const DiagnosticSeries* ds = nullptr;
    if (sname == "diffusion_lyapunov") ds = &art.diff_lyapunov;
    else if (sname == "diffusion_flux_energy") ds = &art.diff_flux_energy;
    else {
      auto it = art.series.find(sname);
      if (it == art.series.end()) throw ConfigError(path + ": unknown series " + sname);
      ds = &it->second;
    }
    double worst = -1e300;
    for (std::size_t i = 1; i < ds->samples.size(); ++i)
      worst = std::max(worst, ds->samples[i].second - ds->samples[i - 1].second);
    r.measured = worst;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "energy-balance") {
    r.threshold = get_num(p, path, "max_err");
    r.comparator = "<=";
    const auto& ly = art.diff_lyapunov.samples;
    const auto& fe = art.diff_flux_energy.samples;
    if (ly.size() < 3 || ly.size() != fe.size())
      throw ConfigError(path + ": energy series missing or mismatched");
    // composite Simpson on the uniform part; trapezoid fallback per interval
    NeumaierSum integ;
    std::size_t i = 0;
    while (i + 2 < fe.size()) {
      const double h1 = fe[i + 1].first - fe[i].first;
      const double h2 = fe[i + 2].first - fe[i + 1].first;
      if (std::abs(h1 - h2) < 1e-9 * h1) {
        integ.add(h1 / 3.0 * (fe[i].second + 4.0 * fe[i + 1].second + fe[i + 2].second));
        i += 2;
      } else {
        integ.add(0.5 * h1 * (fe[i].second + fe[i + 1].second));
        i += 1;
      }
    }
    while (i + 1 < fe.size()) {
      integ.add(0.5 * (fe[i + 1].first - fe[i].first) * (fe[i].second + fe[i + 1].second));
      ++i;
    }
    r.measured = std::abs(ly.back().second + integ.value() - ly.front().second);
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "qk-slope") {
    const std::size_t kmax = get_size(p, path, "k_max");
    r.threshold = get_num(p, path, "min_slope");  // e.g. -1e-10
    r.comparator = ">=";
    double worst = 1e300;
    for (std::size_t k = 1; k <= kmax; ++k) {
      auto it = art.series.find("qk:" + std::to_string(k));
      if (it == art.series.end()) throw ConfigError(path + ": series qk:" + std::to_string(k));
      const auto& smp = it->second.samples;
      for (std::size_t i = 1; i < smp.size(); ++i) {
        const double slope =
            (smp[i].second - smp[i - 1].second) / (smp[i].first - smp[i - 1].first);
        worst = std::min(worst, slope);
      }
    }
    r.measured = worst;
    r.pass = r.measured >= r.threshold;
  } else if (spec.kind == "phi-moment") {
    r.threshold = get_num(p, path, "max_err");
    r.comparator = "<=";
    double worst = 0.0;
    for (const auto& col : art.phi_columns)
      worst = std::max(worst, std::abs(compensated_sum(col.values) - 1.0));
    r.measured = worst;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "phi-nonneg") {
    r.threshold = get_num(p, path, "min");  // e.g. -1e-12
    r.comparator = ">=";
    double mn = 0.0;
    for (const auto& col : art.phi_columns)
      for (double v : col.values) mn = std::min(mn, v);
    r.measured = mn;
    r.pass = r.measured >= r.threshold;
  } else if (spec.kind == "phi-sup-scaling") {
    r.threshold = 1.0 + get_num(p, path, "rel", 0.10);
    r.comparator = "<=";
    std::set<std::size_t> ls;
    for (const auto& col : art.phi_columns) ls.insert(col.l);
    r.measured = 0.0;
    for (std::size_t l : ls) {
      std::vector<double> scaled;
      for (const auto& col : art.phi_columns) {
        if (col.l != l || col.t == 0.0) continue;
        double sup = 0.0;
        for (double v : col.values) sup = std::max(sup, v);
        scaled.push_back((1.0 + col.t) * sup);
      }
      if (scaled.size() < 3) throw ConfigError(path + ": need at least three phi times");
      const double plateau = scaled.back();
      double worst = 0.0;
      for (double v : scaled) worst = std::max(worst, v / plateau);
      // plateau flatness across the last doublings
      const double flat = std::max(std::abs(scaled[scaled.size() - 2] - plateau),
                                   std::abs(scaled[scaled.size() - 3] - plateau)) / plateau;
      r.detail += (r.detail.empty() ? "" : "; ") + std::string("l=") + std::to_string(l) +
                  " plateau=" + format_double(plateau) + " flatness=" + format_double(flat);
      r.measured = std::max({r.measured, worst, 1.0 + flat});
    }
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "gsum-slope") {
    const double t_min = get_num(p, path, "t_min");
    r.threshold = 0.0;
    r.comparator = "<";
    auto it = art.series.find("g_sum");
    if (it == art.series.end()) throw ConfigError(path + ": series g_sum not computed");
    std::vector<double> ts, ys;
    for (const auto& [t, v] : it->second.samples)
      if (t >= t_min && v > 0.0) {
        ts.push_back(t);
        ys.push_back(std::log(v));
      }
    const auto fit = rundetail::linear_fit(ts, ys);
    r.measured = fit.slope;
    r.detail = "r2=" + format_double(fit.r2);
    r.pass = r.measured < 0.0;
  } else if (spec.kind == "gsum-r2") {
    const double t_min = get_num(p, path, "t_min");
    r.threshold = get_num(p, path, "min", 0.99);
    r.comparator = ">=";
    auto it = art.series.find("g_sum");
    if (it == art.series.end()) throw ConfigError(path + ": series g_sum not computed");
    std::vector<double> ts, ys;
    for (const auto& [t, v] : it->second.samples)
      if (t >= t_min && v > 0.0) {
        ts.push_back(t);
        ys.push_back(std::log(v));
      }
    const auto fit = rundetail::linear_fit(ts, ys);
    r.measured = fit.r2;
    r.pass = r.measured >= r.threshold;
  } else if (spec.kind == "duhamel-error") {
    r.threshold = get_num(p, path, "max");
    r.comparator = "<=";
    double mx = 0.0;
    for (std::size_t k = 0; k < art.duhamel_direct.size(); ++k)
      mx = std::max(mx, std::abs(art.duhamel_direct[k] - art.duhamel_recon[k]));
    r.measured = mx;
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "profile-error-decreasing") {
    const std::string nm = get_str(p, path, "norm");
    const double s_val = get_num(p, path, "s", 1.0);
    r.threshold = 1.0;
    r.comparator = "<";
    double prev = -1.0, worst = 0.0;
    for (const auto& pe : art.profiles) {
      if (pe.s != s_val) continue;
      const double e = pe.errors.at(nm);
      if (prev >= 0.0) worst = std::max(worst, e / prev);
      prev = e;
      r.detail += (r.detail.empty() ? "errors " : ", ") + format_double(e);
    }
    if (prev < 0.0) throw ConfigError(path + ": no profiles for s = " + format_double(s_val));
    r.measured = worst;
    r.pass = r.measured < r.threshold;
  } else if (spec.kind == "profile-error-final") {
    const std::string nm = get_str(p, path, "norm");
    const double t = get_num(p, path, "t");
    const double s_val = get_num(p, path, "s", 1.0);
    r.threshold = get_num(p, path, "max");
    r.comparator = "<=";
    bool found = false;
    for (const auto& pe : art.profiles)
      if (pe.t == t && pe.s == s_val) {
        r.measured = pe.errors.at(nm);
        found = true;
      }
    if (!found) throw ConfigError(path + ": no profile at t = " + format_double(t));
    r.pass = r.measured <= r.threshold;
  } else if (spec.kind == "kon-equilibrium") {
    r.threshold = get_num(p, path, "max_residual");
    r.comparator = "<=";
    RateModel model(cfg.model.lambda, cfg.model.kappa, cfg.truncation.n, cfg.model.k_on);
    const double fstar = kon_equilibrium_monomer(model, art.rho0, cfg.truncation.n);
    const auto ceq = kon_equilibrium_profile(model, fstar, cfg.truncation.n);
    const SimState& s = art.snapshots.back().state;
    double resid = std::abs(s.f - fstar);
    for (std::size_t i = 0; i < s.c.size(); ++i)
      resid = std::max(resid, std::abs(s.c[i] - ceq[i]));
    r.measured = resid;
    r.detail = "f*=" + format_double(fstar);
    r.pass = r.measured <= r.threshold;
  } else {
    throw ConfigError("unknown check kind '" + spec.kind + "'");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Output writers
// ---------------------------------------------------------------------------
namespace rundetail {

inline std::string sanitize_num(double v) {
  std::string s = format_double(v);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace rundetail

inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          RunOutcome& out) {
  const RunArtifacts& art = out.art;
  std::vector<WrittenFile>& files = out.files;

  // snapshots
  if (cfg.output.snapshot_stride > 0) {
    CsvWriter index({"idx", "t", "f", "leaked_mass", "mass_drift"});
    for (std::size_t i = 0; i < art.snapshots.size(); ++i) {
      const auto& smp = art.snapshots[i];
      index.row(i, smp.state.t, smp.state.f, smp.state.leaked_mass, smp.mass_drift);
      CsvWriter w({"n", "c_n"});
      for (std::size_t k = 0; k < smp.state.c.size(); k += cfg.output.snapshot_stride)
        w.row(k + 1, smp.state.c[k]);
      files.push_back(write_file(dir, "snapshot_" + std::to_string(i) + ".csv", w.body()));
    }
    files.push_back(write_file(dir, "snapshots_index.csv", index.body()));
  }

  // monomer series
  {
    CsvWriter w({"t", "f", "mass", "mass_drift", "leaked_mass"});
    for (const auto& row : art.f_series) w.row(row[0], row[1], row[2], row[3], row[4]);
    files.push_back(write_file(dir, "f_series.csv", w.body()));
  }

  for (const auto& [name, series] : art.series) {
    CsvWriter w({"t", "value"});
    for (const auto& [t, v] : series.samples) w.row(t, v);
    std::string fname = name;
    for (char& ch : fname)
      if (ch == ':') ch = '_';
    files.push_back(write_file(dir, "series_" + fname + ".csv", w.body()));
  }

  if (!art.comparison_emax.empty()) {
    CsvWriter w({"t", "max_Ek"});
    for (const auto& [t, e] : art.comparison_emax) w.row(t, e);
    files.push_back(write_file(dir, "comparison_Ek.csv", w.body()));
  }
  if (!art.diff_lyapunov.samples.empty()) {
    CsvWriter w({"t", "lyapunov", "flux_energy"});
    for (std::size_t i = 0; i < art.diff_lyapunov.samples.size(); ++i)
      w.row(art.diff_lyapunov.samples[i].first, art.diff_lyapunov.samples[i].second,
            art.diff_flux_energy.samples[i].second);
    files.push_back(write_file(dir, "diffusion_energies.csv", w.body()));
  }

  if (!art.phi_columns.empty()) {
    std::set<std::size_t> ls;
    for (const auto& col : art.phi_columns) ls.insert(col.l);
    for (std::size_t l : ls) {
      CsvWriter w({"t", "k", "phi"});
      for (const auto& col : art.phi_columns) {
        if (col.l != l) continue;
        for (std::size_t k = 0; k < col.values.size(); ++k)
          w.row(col.t, k + 1, col.values[k]);
      }
      files.push_back(write_file(dir, "phi_l" + std::to_string(l) + ".csv", w.body()));
    }
  }

  if (!art.duhamel_recon.empty()) {
    CsvWriter w({"k", "direct", "reconstructed", "abs_err"});
    for (std::size_t k = 0; k < art.duhamel_recon.size(); ++k)
      w.row(k + 1, art.duhamel_direct[k], art.duhamel_recon[k],
            std::abs(art.duhamel_direct[k] - art.duhamel_recon[k]));
    files.push_back(write_file(dir, "duhamel.csv", w.body()));
  }

  for (const auto& pe : art.profiles) {
    CsvWriter w({"x", "value", "target", "error"});
    const double amp = std::max(art.rho0 - 1.0 / cfg.model.kappa, 0.0);
    for (std::size_t i = 0; i < pe.profile.x.size(); ++i) {
      const double target = amp / pe.s * std::exp(-pe.profile.x[i] / pe.s);
      w.row(pe.profile.x[i], pe.profile.values[i], target, pe.profile.values[i] - target);
    }
    files.push_back(write_file(dir,
                               "profile_t" + rundetail::sanitize_num(pe.t) + "_s" +
                                   rundetail::sanitize_num(pe.s) + ".csv",
                               w.body()));
  }

  // acceptance report
  json report;
  report["schema_version"] = 1;
  report["name"] = cfg.name;
  report["pass"] = out.all_checks_pass;
  report["checks"] = json::array();
  for (const auto& c : out.checks) {
    json jc;
    jc["name"] = c.name;
    jc["kind"] = c.kind;
    jc["measured"] = c.measured;
    jc["threshold"] = c.threshold;
    jc["comparator"] = c.comparator;
    jc["pass"] = c.pass;
    if (!c.detail.empty()) jc["detail"] = c.detail;
    report["checks"].push_back(jc);
  }
  files.push_back(write_file(dir, "acceptance_report.json", report.dump(2) + "\n"));

  // manifest
  json manifest;
  manifest["schema_version"] = 1;
  manifest["name"] = cfg.name;
  manifest["config"] = cfg.echo;
  manifest["solver"] = {{"method", to_string(art.method_resolved)},
                        {"rel_tol", cfg.integrator.rel_tol},
                        {"abs_tol", cfg.integrator.abs_tol}};
  manifest["wall_seconds"] = art.wall_seconds;
  manifest["mass_drift"] = {{"max_abs", art.max_abs_drift},
                            {"final", art.f_series.empty() ? 0.0 : art.f_series.back()[3]}};
  manifest["leaked_mass"] = art.f_series.empty() ? 0.0 : art.f_series.back()[4];
  manifest["stop_reason"] = to_string(StopReason::ScheduleComplete);
  manifest["solver_failed"] = out.solver_failed;
  if (out.solver_failed) manifest["failure"] = out.failure_message;
  manifest["stats"] = {{"steps_accepted", art.stats.steps_accepted},
                       {"steps_rejected", art.stats.steps_rejected},
                       {"rhs_evals", art.stats.rhs_evals},
                       {"stage_solves", art.stats.stage_solves},
                       {"clipped_mass", art.stats.clipped_mass},
                       {"min_component", art.stats.min_component}};
  manifest["outputs"] = json::array();
  for (const auto& f : files) {
    manifest["outputs"].push_back(
        {{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64}});
  }
  files.push_back(write_file(dir, "manifest.json", manifest.dump(2) + "\n"));
}

// ---------------------------------------------------------------------------
// Top-level entry
// ---------------------------------------------------------------------------
inline RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& outdir) {
  RunOutcome out;
  out.config = cfg;
  try {
    run_simulation(cfg, out.art);
  } catch (const SolverFailure& e) {
    out.solver_failed = true;
    out.all_checks_pass = false;
    out.failure_message = std::string(e.what()) + " at t = " + format_double(e.t_fail);
    write_outputs(outdir, cfg, out);
    return out;
  }
  for (const auto& spec : cfg.checks) {
    CheckResult r = evaluate_check(spec, cfg, out.art);
    out.all_checks_pass = out.all_checks_pass && r.pass;
    out.checks.push_back(std::move(r));
  }
  write_outputs(outdir, cfg, out);
  return out;
}

}  // namespace bdlab
