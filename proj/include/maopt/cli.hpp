#pragma once

// Command bodies behind tools/maopt. They take parsed options and streams
// so tests can drive them without spawning a process.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maopt/errors.hpp"
#include "maopt/io_json.hpp"
#include "maopt/laga.hpp"
#include "maopt/scenario.hpp"
#include "maopt/validation.hpp"

namespace maopt::cli {

enum ExitCode : int { ok = 0, validation_failed = 1, config_error = 2, numeric_error = 3 };

/// Configuration and usage problems map to 2, everything raised while
/// computing maps to 3.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_input:
    case ErrorKind::unsupported_configuration:
    case ErrorKind::infeasible_init: return config_error;
    default: return numeric_error;
  }
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct CommonOptions {
  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<EngineKind> engine;
  int jobs = 0;
  int verbosity = 0;
};

/// Everything a config file can describe.
struct RunConfig {
  ScenarioSpec scenario;
  LagaConfig laga;
  ExperimentOptions experiment;
  std::optional<SweepSpec> sweep;
  int optimize_realization = 0;
};

namespace detail {

/// Replaces `alias` (in log units) by `key` (linear) inside a scenario
/// object; giving both is an error.
inline void convert_alias(ordered_json& s, const char* alias, const char* key, double (*conv)(double)) {
  if (!s.contains(alias)) return;
  if (s.contains(key))
    fail(ErrorKind::config, "cli::load_config", std::string("give either '") + key + "' or '" + alias + "', not both");
  if (!s.at(alias).is_number()) fail(ErrorKind::config, "cli::load_config", std::string(alias) + " must be a number");
  const double v = conv(s.at(alias).get<double>());
  s.erase(alias);
  s[key] = v;
}

}  // namespace detail

/// Top-level keys: "scenario", "laga", "experiment", "optimize". The
/// scenario may use pt_dbm, sigma2_dbm and rician_beta_db instead of the
/// linear fields; angles in hotspot_centers and angular_spread stay in
/// radians.
inline RunConfig parse_config(ordered_json j) {
  const std::string where = "cli::load_config";
  if (!j.is_object()) fail(ErrorKind::config, where, "config must be a JSON object");
  maopt::detail::reject_unknown(j, {"scenario", "laga", "experiment", "optimize"}, where);
  RunConfig rc;
  ordered_json scen = j.value("scenario", ordered_json::object());
  if (!scen.is_object()) fail(ErrorKind::config, where, "scenario must be a JSON object");
  detail::convert_alias(scen, "pt_dbm", "pt", dbm_to_watts);
  detail::convert_alias(scen, "sigma2_dbm", "sigma2", dbm_to_watts);
  detail::convert_alias(scen, "rician_beta_db", "rician_beta", db_to_linear);
  rc.scenario = scenario_from_json(scen);
  rc.laga = laga_from_json(j.value("laga", ordered_json()), rc.scenario.wavelength);

  try {
    if (j.contains("experiment")) {
      const auto& e = j.at("experiment");
      if (!e.is_object()) fail(ErrorKind::config, where, "experiment must be a JSON object");
      maopt::detail::reject_unknown(e, {"schemes", "realizations", "eval_samples", "eval_seed", "sweep"}, where);
      if (e.contains("schemes")) {
        rc.experiment.schemes.clear();
        for (const auto& s : e.at("schemes")) {
          try {
            rc.experiment.schemes.push_back(scheme_from_string(s.get<std::string>()));
          } catch (const Error& err) {
            fail(ErrorKind::config, where, err.what());
          }
        }
      }
      maopt::detail::read_opt(e, "realizations", rc.experiment.realizations);
      maopt::detail::read_opt(e, "eval_samples", rc.experiment.eval_samples);
      if (e.contains("eval_seed")) rc.experiment.eval_seed = e.at("eval_seed").get<std::uint64_t>();
      if (e.contains("sweep")) {
        const auto& sw = e.at("sweep");
        maopt::detail::reject_unknown(sw, {"axis", "values"}, where);
        SweepSpec spec;
        spec.axis = sweep_axis_from_string(sw.at("axis").get<std::string>());
        spec.values = sw.at("values").get<std::vector<double>>();
        rc.sweep = spec;
      }
    }
    if (j.contains("optimize")) {
      const auto& o = j.at("optimize");
      maopt::detail::reject_unknown(o, {"realization"}, where);
      maopt::detail::read_opt(o, "realization", rc.optimize_realization);
      if (rc.optimize_realization < 0) fail(ErrorKind::config, where, "optimize.realization must be >= 0");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, where, e.what());
  }
  rc.experiment.validate();
  return rc;
}

/// Reads the config file and applies the command-line overrides. The seed
/// override replaces the scenario seed, from which every other stream is
/// derived.
inline RunConfig load_config(const CommonOptions& opt) {
  if (opt.config_path.empty()) fail(ErrorKind::config, "cli::load_config", "--config is required");
  if (!std::filesystem::exists(opt.config_path))
    fail(ErrorKind::config, "cli::load_config", "config file not found: " + opt.config_path);
  RunConfig rc = parse_config(read_json_file(opt.config_path));
  if (opt.seed) rc.scenario.seed = *opt.seed;
  if (opt.engine) rc.laga.engine = *opt.engine;
  if (opt.jobs < 0) fail(ErrorKind::config, "cli::load_config", "--jobs must be >= 0");
  rc.experiment.jobs = opt.jobs;
  return rc;
}

/// With an engine override, evaluate and sweep keep only the MA scheme of
/// that engine next to the fixed-array baselines.
inline void restrict_schemes(RunConfig& rc, const std::optional<EngineKind>& engine) {
  if (!engine) return;
  const Scheme drop = *engine == EngineKind::mc ? Scheme::ma_de : Scheme::ma_mc;
  std::erase(rc.experiment.schemes, drop);
  rc.experiment.validate();
}

/// Canonical echo of the effective configuration; its hash stamps every
/// output file.
inline ordered_json effective_config(const RunConfig& rc) {
  ordered_json j;
  j["scenario"] = to_json(rc.scenario);
  j["laga"] = to_json(rc.laga);
  ordered_json e;
  ordered_json schemes = ordered_json::array();
  for (auto s : rc.experiment.schemes) schemes.push_back(to_string(s));
  e["schemes"] = std::move(schemes);
  e["realizations"] = rc.experiment.realizations;
  e["eval_samples"] = rc.experiment.eval_samples;
  e["eval_seed"] = rc.experiment.eval_seed ? ordered_json(*rc.experiment.eval_seed) : ordered_json(nullptr);
  if (rc.sweep) e["sweep"] = {{"axis", to_string(rc.sweep->axis)}, {"values", rc.sweep->values}};
  j["experiment"] = std::move(e);
  j["optimize"] = {{"realization", rc.optimize_realization}};
  return j;
}

namespace detail {

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::config, "cli::open_output", "cannot write " + path.string());
  os.imbue(std::locale::classic());
  return os;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "maopt: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "maopt: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    err << "maopt: numeric failure: " << e.what() << '\n';
    return numeric_error;
  }
}

}  // namespace detail

/// Optimizes the layout for one user draw and writes layout.json and
/// trace.csv.
inline int cmd_optimize(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    RunConfig rc = load_config(opt);
    const ordered_json echo = effective_config(rc);
    const std::string hash = config_hash(echo);
    const auto& spec = rc.scenario;
    const auto r = static_cast<std::uint64_t>(rc.optimize_realization);

    const auto candidates = generate_candidates(spec, spec.seed);
    const StatisticalCsi csi = draw_user_set(candidates, spec, derive_seed(spec.seed, Stream::user_draw, r));
    LagaConfig cfg = rc.laga;
    if (cfg.engine == EngineKind::mc) cfg.seed = derive_seed(spec.seed, Stream::mc_gradient, r);
    if (opt.verbosity > 0)
      err << "optimizing N=" << spec.n_antennas << " K=" << spec.n_users << " with engine " << to_string(cfg.engine)
          << '\n';
    const LagaResult res =
        laga_optimize(optimizer_start(spec.n_antennas, spec.region), spec.region, csi, spec.pt, spec.sigma2, cfg);

    ordered_json lj = to_json(res.layout);
    lj["config_hash"] = hash;
    lj["engine"] = to_string(cfg.engine);
    lj["surrogate_rate"] = res.final_rate;
    lj["stages"] = res.trace.stages.size();
    auto lo = detail::open_output(opt.output_dir, "layout.json");
    lo << lj.dump(2) << '\n';
    auto to = detail::open_output(opt.output_dir, "trace.csv");
    write_trace_csv(to, res.trace, "config_hash=" + hash);

    out << "engine " << to_string(cfg.engine) << ": surrogate rate " << res.trace.initial_rate << " -> "
        << res.final_rate << " bit/s/Hz after " << res.trace.stages.size() << " stages, "
        << res.trace.iterations.size() << " iterations\n";
    out << "wrote " << (std::filesystem::path(opt.output_dir) / "layout.json").string() << " and trace.csv\n";
    return static_cast<int>(ok);
  });
}

inline void print_reports(std::ostream& out, const std::vector<EvalReport>& reps) {
  for (const auto& r : reps)
    out << "  " << r.scheme << ": mean " << r.mean_rate << " bit/s/Hz, se " << r.stderr_ << ", failures " << r.failures
        << '\n';
}

/// Runs every configured scheme over the realizations and writes
/// report.csv and summary.json.
inline int cmd_evaluate(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    RunConfig rc = load_config(opt);
    restrict_schemes(rc, opt.engine);
    const ordered_json echo = effective_config(rc);
    const std::string hash = config_hash(echo);
    if (opt.verbosity > 0) err << "evaluating " << rc.experiment.realizations << " realizations\n";
    const auto reps = run_experiment(rc.scenario, rc.laga, rc.experiment);
    auto csv = detail::open_output(opt.output_dir, "report.csv");
    write_reports_csv(csv, reps, hash);
    ordered_json summary = reports_summary(reps, hash);
    summary["config"] = echo;
    auto js = detail::open_output(opt.output_dir, "summary.json");
    js << summary.dump(2) << '\n';
    out << "config_hash " << hash << '\n';
    print_reports(out, reps);
    return static_cast<int>(ok);
  });
}

/// One experiment per sweep value; sweep.csv leads with the swept value.
inline int cmd_sweep(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    RunConfig rc = load_config(opt);
    restrict_schemes(rc, opt.engine);
    if (!rc.sweep) fail(ErrorKind::config, "cli::cmd_sweep", "config has no experiment.sweep section");
    if (rc.sweep->values.empty()) fail(ErrorKind::config, "cli::cmd_sweep", "sweep value list is empty");
    const ordered_json echo = effective_config(rc);
    const std::string hash = config_hash(echo);
    auto csv = detail::open_output(opt.output_dir, "sweep.csv");
    ordered_json groups = ordered_json::array();
    bool first = true;
    for (double v : rc.sweep->values) {
      if (opt.verbosity > 0) err << to_string(rc.sweep->axis) << " = " << v << '\n';
      const auto reps = run_experiment(with_axis_value(rc.scenario, rc.sweep->axis, v), rc.laga, rc.experiment);
      write_reports_csv(csv, reps, hash, first, v, to_string(rc.sweep->axis));
      first = false;
      out << to_string(rc.sweep->axis) << " = " << v << '\n';
      print_reports(out, reps);
      ordered_json g = reports_summary(reps, hash);
      g.erase("config");
      g["value"] = v;
      groups.push_back(std::move(g));
    }
    ordered_json summary;
    summary["config_hash"] = hash;
    summary["config"] = echo;
    summary["axis"] = to_string(rc.sweep->axis);
    summary["groups"] = std::move(groups);
    auto js = detail::open_output(opt.output_dir, "sweep_summary.json");
    js << summary.dump(2) << '\n';
    return static_cast<int>(ok);
  });
}

struct ValidateOptions {
  validation::Level level = validation::Level::quick;
  std::vector<int> checks;  // empty: the level's suite
  bool tamper_water_fill = false;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  int verbosity = 0;
  std::string output_dir;  // empty: print only
};

/// Prints the pass/fail table; exit 0 iff every selected check passes.
inline int cmd_validate(const ValidateOptions& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    validation::Options vo;
    if (opt.seed) vo.seed = *opt.seed;
    vo.tamper_water_fill = opt.tamper_water_fill;
    vo.jobs = opt.jobs;
    vo.log = opt.verbosity > 0 ? &err : nullptr;
    for (int id : opt.checks)
      if (id < 1 || id > 10) fail(ErrorKind::config, "cli::cmd_validate", "check ids run from 1 to 10");
    const bool quick = opt.level == validation::Level::quick;
    const auto results =
        validation::run_checks(opt.checks.empty() ? validation::suite_ids(opt.level) : opt.checks, vo, quick);
    validation::print_table(out, results);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    if (!opt.output_dir.empty()) {
      auto os = detail::open_output(opt.output_dir, "validation.txt");
      validation::print_table(os, results);
    }
    out << (all ? "all checks passed" : "some checks FAILED") << '\n';
    return static_cast<int>(all ? ok : validation_failed);
  });
}

}  // namespace maopt::cli
