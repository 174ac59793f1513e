#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "maopt/channel_model.hpp"
#include "maopt/errors.hpp"
#include "maopt/grad_de.hpp"
#include "maopt/grad_mc.hpp"
#include "maopt/io_json.hpp"
#include "maopt/laga.hpp"
#include "maopt/rng.hpp"
#include "maopt/types.hpp"
#include "maopt/zf_precoding.hpp"

namespace maopt {

enum class PowerLaw { log_uniform_20db, equal, exponential };

inline std::string to_string(PowerLaw p) {
  switch (p) {
    case PowerLaw::log_uniform_20db: return "log_uniform_20db";
    case PowerLaw::equal: return "equal";
    case PowerLaw::exponential: return "exponential";
  }
  return "?";
}

struct AngularCenter {
  double azimuth = 0.0;    // radians
  double elevation = 0.0;  // radians
};

struct ScenarioSpec {
  int n_antennas = 16;
  int n_users = 12;
  double wavelength = 0.0598;
  MovingRegion region{8 * 0.0598, 8 * 0.0598, 0.0598 / 2};
  int paths_per_user = 12;
  int candidate_count = 200;
  std::vector<AngularCenter> hotspot_centers;
  double angular_spread = 5.0 * std::numbers::pi / 180.0;
  double cluster_rate = 0.0;
  double rician_beta = 10.0;
  double pt = 1.0;
  double sigma2 = 1e-12;
  std::uint64_t seed = 1;
  // Generator knobs beyond the core fields.
  PowerLaw power_law = PowerLaw::log_uniform_20db;
  double reference_power = 1e-11;

  void validate() const {
    const std::string where = "ScenarioSpec::validate";
    if (n_antennas < 1) fail(ErrorKind::config, where, "n_antennas must be >= 1");
    if (n_users < 1) fail(ErrorKind::config, where, "n_users must be >= 1");
    if (paths_per_user < 1) fail(ErrorKind::config, where, "paths_per_user must be >= 1");
    if (candidate_count < 1) fail(ErrorKind::config, where, "candidate_count must be >= 1");
    if (!(wavelength > 0.0)) fail(ErrorKind::config, where, "wavelength must be positive");
    if (!(region.sx > 0.0) || !(region.sy > 0.0) || !(region.min_spacing > 0.0))
      fail(ErrorKind::config, where, "region sizes and min_spacing must be positive");
    if (!(angular_spread >= 0.0)) fail(ErrorKind::config, where, "angular_spread must be >= 0");
    if (!(cluster_rate >= 0.0 && cluster_rate <= 1.0)) fail(ErrorKind::config, where, "cluster_rate must lie in [0, 1]");
    if (!(rician_beta > 0.0) || !std::isfinite(rician_beta)) fail(ErrorKind::config, where, "rician_beta must be positive");
    if (!(pt > 0.0)) fail(ErrorKind::config, where, "pt must be positive");
    if (!(sigma2 > 0.0)) fail(ErrorKind::config, where, "sigma2 must be positive");
    if (!(reference_power > 0.0)) fail(ErrorKind::config, where, "reference_power must be positive");
  }
};

// ---------------------------------------------------------------------------
// Candidate generation and user placement

namespace detail {
inline double draw_elevation(Rng& rng) {
  std::uniform_real_distribution<double> u(-60.0, -5.0);
  return u(rng) * std::numbers::pi / 180.0;
}
inline double draw_azimuth(Rng& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  return u(rng);
}
}  // namespace detail

/// Candidate 0 is the designated hotspot. Each candidate is a one-user CSI
/// whose first path is the LoS path; the remaining paths scatter around the
/// candidate's cluster center with the configured angular spread.
inline std::vector<StatisticalCsi> generate_candidates(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_stream(seed, Stream::candidates, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int lk = spec.paths_per_user;
  std::vector<StatisticalCsi> out;
  out.reserve(spec.candidate_count);
  for (int c = 0; c < spec.candidate_count; ++c) {
    StatisticalCsi csi;
    csi.wavelength = spec.wavelength;
    csi.power = RMatrix::Zero(lk, 1);
    csi.user_path_ranges = {{0, lk}};
    csi.los_index = {0};

    const double los_az = detail::draw_azimuth(rng);
    const double los_el = detail::draw_elevation(rng);
    AngularCenter center;
    if (!spec.hotspot_centers.empty()) {
      center = spec.hotspot_centers[static_cast<std::size_t>(c) % spec.hotspot_centers.size()];
    } else {
      center.azimuth = detail::draw_azimuth(rng);
      center.elevation = detail::draw_elevation(rng);
    }
    csi.wavevectors.push_back(Wavevector::from_angles(spec.wavelength, los_el, los_az));
    for (int l = 1; l < lk; ++l) {
      const double az = center.azimuth + spec.angular_spread * normal(rng);
      const double el = center.elevation + spec.angular_spread * normal(rng);
      csi.wavevectors.push_back(Wavevector::from_angles(spec.wavelength, el, az));
    }
    for (int l = 0; l < lk; ++l) {
      const double u = unit(rng);
      switch (spec.power_law) {
        case PowerLaw::log_uniform_20db: csi.power(l, 0) = spec.reference_power * std::pow(10.0, -2.0 * u); break;
        case PowerLaw::equal: csi.power(l, 0) = spec.reference_power; break;
        case PowerLaw::exponential: csi.power(l, 0) = spec.reference_power * std::exp(-static_cast<double>(l)); break;
      }
    }
    out.push_back(std::move(csi));
  }
  const RicianScaling scaling = rician_scaling(spec.rician_beta, out);
  for (auto& csi : out) csi = apply_rician_scaling(std::move(csi), scaling);
  return out;
}

/// With probability cluster_rate a user sits at candidate 0, otherwise at a
/// uniformly chosen other candidate.
inline std::vector<int> draw_user_indices(int candidate_count, int n_users, double cluster_rate, std::uint64_t seed) {
  if (candidate_count < 1) fail(ErrorKind::invalid_input, "scenario_harness::draw_user_set", "no candidates");
  Rng rng = make_stream(seed, Stream::user_draw, 0);
  std::bernoulli_distribution hot(cluster_rate);
  std::vector<int> idx(n_users);
  for (auto& i : idx) {
    const bool at_hotspot = hot(rng);
    if (candidate_count == 1 || at_hotspot) {
      i = 0;
    } else {
      std::uniform_int_distribution<int> other(1, candidate_count - 1);
      i = other(rng);
    }
  }
  return idx;
}

/// Stacks single-user candidate CSIs into one K-user CSI.
inline StatisticalCsi assemble_users(const std::vector<StatisticalCsi>& candidates, const std::vector<int>& idx) {
  StatisticalCsi out;
  if (candidates.empty() || idx.empty()) fail(ErrorKind::invalid_input, "scenario_harness::assemble_users", "nothing to assemble");
  out.wavelength = candidates[0].wavelength;
  int total = 0;
  for (int i : idx) total += candidates.at(i).num_paths();
  const int K = static_cast<int>(idx.size());
  out.power = RMatrix::Zero(total, K);
  int start = 0;
  for (int k = 0; k < K; ++k) {
    const auto& c = candidates.at(idx[k]);
    const int lk = c.num_paths();
    for (int l = 0; l < lk; ++l) {
      out.wavevectors.push_back(c.wavevectors[l]);
      out.power(start + l, k) = c.power(l, 0);
    }
    out.user_path_ranges.push_back({start, start + lk});
    if (!c.los_index.empty() && c.los_index[0])
      out.los_index.emplace_back(start + *c.los_index[0]);
    else
      out.los_index.emplace_back(std::nullopt);
    start += lk;
  }
  out.validate();
  return out;
}

inline StatisticalCsi draw_user_set(const std::vector<StatisticalCsi>& candidates, const ScenarioSpec& spec,
                                    std::uint64_t seed) {
  if (candidates.empty()) fail(ErrorKind::invalid_input, "scenario_harness::draw_user_set", "no candidates");
  return assemble_users(candidates,
                        draw_user_indices(static_cast<int>(candidates.size()), spec.n_users, spec.cluster_rate, seed));
}

// ---------------------------------------------------------------------------
// Ergodic evaluation

struct RateEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int resampled = 0;
};

inline double standard_error(const std::vector<double>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Mean instantaneous ZF sum rate over fresh draws from the evaluation
/// stream, which no gradient engine touches.
inline RateEstimate evaluate_ergodic_rate(const AntennaLayout& layout, const StatisticalCsi& csi, double pt,
                                          double sigma2, int n_samples, std::uint64_t seed) {
  const std::string where = "scenario_harness::evaluate_ergodic_rate";
  if (n_samples < 1) fail(ErrorKind::invalid_input, where, "n_samples must be >= 1");
  const CMatrix q = transmit_frm(layout, csi);
  std::vector<double> rates;
  rates.reserve(n_samples);
  int resampled = 0;
  std::uint64_t resample_index = 0;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = make_stream(seed, Stream::evaluation, static_cast<std::uint64_t>(i));
    ChannelSample s = channel_from_prv(q, csi, sample_prv(csi, rng));
    for (;;) {
      try {
        rates.push_back(sample_rate(s.h, pt, sigma2).water.rate);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::singular_channel) throw;
        ++resampled;
        if (10 * resampled > n_samples)
          fail(ErrorKind::degenerate_scenario, where, "more than 10% of channel draws had a singular Gram matrix");
        Rng r2 = make_stream(seed, Stream::evaluation_resample, resample_index++);
        s = channel_from_prv(q, csi, sample_prv(csi, r2));
      }
    }
  }
  return {mean_of(rates), standard_error(rates), resampled};
}

// ---------------------------------------------------------------------------
// Experiments

enum class Scheme { upa_dense, upa_sparse, ma_mc, ma_de, ma_instantaneous };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::upa_dense: return "UPA-dense";
    case Scheme::upa_sparse: return "UPA-sparse";
    case Scheme::ma_mc: return "MA-MC";
    case Scheme::ma_de: return "MA-DE";
    case Scheme::ma_instantaneous: return "MA-instantaneous";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  for (Scheme v : {Scheme::upa_dense, Scheme::upa_sparse, Scheme::ma_mc, Scheme::ma_de, Scheme::ma_instantaneous})
    if (to_string(v) == s) return v;
  fail(ErrorKind::config, "scheme_from_string", "unknown scheme '" + s + "'");
}

/// Grid spanning the region with spacing S/cols, with no feasibility check;
/// this is the fixed UPA-sparse baseline.
inline AntennaLayout upa_sparse_grid(int n, const MovingRegion& region) {
  const GridShape g = near_square_grid(n);
  return centered_grid(n, region.sx / g.cols, region.sy / g.rows);
}

/// Starting layout for the MA schemes: the sparse UPA when it is strictly
/// feasible, otherwise the grid whose spacing sits halfway between the
/// minimum spacing and the largest spacing that keeps it inside the region.
inline AntennaLayout optimizer_start(int n, const MovingRegion& region) {
  try {
    return upa_sparse_init(n, region, 1.0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::infeasible_init) throw;
  }
  const GridShape g = near_square_grid(n);
  auto mid = [&](double s, int count) {
    if (count <= 1) return s / 2.0;
    const double upper = s / (count - 1);
    return 0.5 * (region.min_spacing + upper);
  };
  AntennaLayout layout = centered_grid(n, mid(region.sx, g.cols), mid(region.sy, g.rows));
  if (!strictly_feasible(layout, region))
    fail(ErrorKind::infeasible_init, "scenario_harness::optimizer_start", "no strictly feasible grid fits the region");
  return layout;
}

struct RealizationResult {
  int realization = 0;
  bool ok = false;
  double mean_rate = 0.0;
  double stderr_ = 0.0;
  std::optional<AntennaLayout> layout;
  std::string error;
};

struct EvalReport {
  std::string scheme;
  std::vector<RealizationResult> realizations;  // indexed by realization
  double mean_rate = 0.0;  // over successful realizations
  double stderr_ = 0.0;
  int failures = 0;
  ordered_json config;

  std::vector<double> rates() const {
    std::vector<double> r;
    for (const auto& x : realizations)
      if (x.ok) r.push_back(x.mean_rate);
    return r;
  }
};

struct ExperimentOptions {
  std::vector<Scheme> schemes{Scheme::upa_dense, Scheme::upa_sparse, Scheme::ma_mc, Scheme::ma_de};
  int realizations = 20;
  int eval_samples = 100;
  int jobs = 0;  // 0 = hardware concurrency
  std::optional<std::uint64_t> eval_seed;  // defaults to the scenario seed

  void validate() const {
    if (realizations < 1) fail(ErrorKind::config, "ExperimentOptions::validate", "realizations must be >= 1");
    if (eval_samples < 1) fail(ErrorKind::config, "ExperimentOptions::validate", "eval_samples must be >= 1");
    if (schemes.empty()) fail(ErrorKind::config, "ExperimentOptions::validate", "no schemes selected");
  }
};

/// Layout a scheme uses on one realization's user set.
inline AntennaLayout scheme_layout(Scheme scheme, const ScenarioSpec& spec, const StatisticalCsi& csi,
                                   const LagaConfig& base, int realization) {
  const auto r = static_cast<std::uint64_t>(realization);
  switch (scheme) {
    case Scheme::upa_dense: return upa_dense_init(spec.n_antennas, spec.wavelength);
    case Scheme::upa_sparse: return upa_sparse_grid(spec.n_antennas, spec.region);
    case Scheme::ma_mc: {
      LagaConfig cfg = base;
      cfg.engine = EngineKind::mc;
      cfg.seed = derive_seed(spec.seed, Stream::mc_gradient, r);
      return laga_optimize(optimizer_start(spec.n_antennas, spec.region), spec.region, csi, spec.pt, spec.sigma2, cfg)
          .layout;
    }
    case Scheme::ma_de: {
      LagaConfig cfg = base;
      cfg.engine = EngineKind::de;
      return laga_optimize(optimizer_start(spec.n_antennas, spec.region), spec.region, csi, spec.pt, spec.sigma2, cfg)
          .layout;
    }
    case Scheme::ma_instantaneous: {
      McEngine engine(csi, spec.pt, spec.sigma2, 1, derive_seed(spec.seed, Stream::instantaneous, r));
      return laga_optimize(optimizer_start(spec.n_antennas, spec.region), spec.region, engine, base).layout;
    }
  }
  fail(ErrorKind::invalid_input, "scenario_harness::scheme_layout", "unknown scheme");
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception that escapes fn is rethrown after all workers stop.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline ordered_json to_json(const ScenarioSpec& s);
inline ordered_json to_json(const LagaConfig& c);

/// One EvalReport per scheme. Every scheme sees the same user set and the
/// same evaluation draws in a given realization.
inline std::vector<EvalReport> run_experiment(const ScenarioSpec& spec, const LagaConfig& laga,
                                              const ExperimentOptions& opt) {
  spec.validate();
  laga.validate();
  opt.validate();
  const auto candidates = generate_candidates(spec, spec.seed);
  const std::uint64_t eval_master = opt.eval_seed.value_or(spec.seed);
  const int S = static_cast<int>(opt.schemes.size());
  const int R = opt.realizations;
  std::vector<RealizationResult> cells(static_cast<std::size_t>(S * R));

  parallel_for(R, opt.jobs, [&](int r) {
    const auto ur = static_cast<std::uint64_t>(r);
    StatisticalCsi csi = draw_user_set(candidates, spec, derive_seed(spec.seed, Stream::user_draw, ur));
    const std::uint64_t eval_seed = derive_seed(eval_master, Stream::evaluation, ur);
    for (int s = 0; s < S; ++s) {
      auto& cell = cells[static_cast<std::size_t>(s * R + r)];
      cell.realization = r;
      try {
        AntennaLayout layout = scheme_layout(opt.schemes[s], spec, csi, laga, r);
        const RateEstimate est = evaluate_ergodic_rate(layout, csi, spec.pt, spec.sigma2, opt.eval_samples, eval_seed);
        cell.mean_rate = est.mean;
        cell.stderr_ = est.stderr_;
        cell.layout = std::move(layout);
        cell.ok = true;
      } catch (const Error& e) {
        cell.error = e.what();
      }
    }
  });

  ordered_json echo;
  echo["scenario"] = to_json(spec);
  echo["laga"] = to_json(laga);
  std::vector<EvalReport> out;
  for (int s = 0; s < S; ++s) {
    EvalReport rep;
    rep.scheme = to_string(opt.schemes[s]);
    rep.config = echo;
    for (int r = 0; r < R; ++r) {
      auto& cell = cells[static_cast<std::size_t>(s * R + r)];
      if (!cell.ok) ++rep.failures;
      rep.realizations.push_back(std::move(cell));
    }
    if (5 * rep.failures > R)
      fail(ErrorKind::degenerate_scenario, "scenario_harness::run_experiment",
           rep.scheme + ": more than 20% of realizations failed (first: " +
               [&] {
                 for (const auto& x : rep.realizations)
                   if (!x.ok) return x.error;
                 return std::string{};
               }() +
               ")");
    const auto rates = rep.rates();
    rep.mean_rate = mean_of(rates);
    rep.stderr_ = standard_error(rates);
    out.push_back(std::move(rep));
  }
  return out;
}

/// Mean and standard error of the per-realization difference a - b over
/// realizations where both succeeded.
struct PairedDifference {
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
  bool exceeds(double z) const { return mean > z * stderr_; }
};

inline PairedDifference paired_difference(const EvalReport& a, const EvalReport& b) {
  std::vector<double> d;
  const auto n = std::min(a.realizations.size(), b.realizations.size());
  for (std::size_t i = 0; i < n; ++i)
    if (a.realizations[i].ok && b.realizations[i].ok)
      d.push_back(a.realizations[i].mean_rate - b.realizations[i].mean_rate);
  return {mean_of(d), standard_error(d), static_cast<int>(d.size())};
}

inline const EvalReport& find_report(const std::vector<EvalReport>& reps, Scheme s) {
  for (const auto& r : reps)
    if (r.scheme == to_string(s)) return r;
  fail(ErrorKind::invalid_input, "find_report", "scheme not in reports: " + to_string(s));
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { rician_beta, cluster_rate, region_size, pt, n_users, sigma2 };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::rician_beta: return "rician_beta";
    case SweepAxis::cluster_rate: return "cluster_rate";
    case SweepAxis::region_size: return "region_size";
    case SweepAxis::pt: return "pt";
    case SweepAxis::n_users: return "n_users";
    case SweepAxis::sigma2: return "sigma2";
  }
  return "?";
}

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::rician_beta, SweepAxis::cluster_rate, SweepAxis::region_size, SweepAxis::pt,
                      SweepAxis::n_users, SweepAxis::sigma2})
    if (to_string(a) == s) return a;
  fail(ErrorKind::config, "sweep_axis_from_string", "unknown sweep axis '" + s + "'");
}

/// region_size sets both sides of the square region, in meters.
inline ScenarioSpec with_axis_value(ScenarioSpec spec, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::rician_beta: spec.rician_beta = v; break;
    case SweepAxis::cluster_rate: spec.cluster_rate = v; break;
    case SweepAxis::region_size: spec.region.sx = spec.region.sy = v; break;
    case SweepAxis::pt: spec.pt = v; break;
    case SweepAxis::n_users: spec.n_users = static_cast<int>(std::lround(v)); break;
    case SweepAxis::sigma2: spec.sigma2 = v; break;
  }
  return spec;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::rician_beta;
  std::vector<double> values;
};

struct SweepGroup {
  double value = 0.0;
  std::vector<EvalReport> reports;
};

inline std::vector<SweepGroup> run_sweep(const ScenarioSpec& spec, const LagaConfig& laga, const ExperimentOptions& opt,
                                         const SweepSpec& sweep) {
  if (sweep.values.empty()) fail(ErrorKind::config, "scenario_harness::run_sweep", "sweep value list is empty");
  std::vector<SweepGroup> out;
  for (double v : sweep.values) out.push_back({v, run_experiment(with_axis_value(spec, sweep.axis, v), laga, opt)});
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline ordered_json to_json(const ScenarioSpec& s) {
  ordered_json j;
  j["n_antennas"] = s.n_antennas;
  j["n_users"] = s.n_users;
  j["region"] = {{"sx", s.region.sx}, {"sy", s.region.sy}, {"min_spacing", s.region.min_spacing}};
  j["wavelength"] = s.wavelength;
  j["paths_per_user"] = s.paths_per_user;
  j["candidate_count"] = s.candidate_count;
  ordered_json hc = ordered_json::array();
  for (const auto& c : s.hotspot_centers) hc.push_back({c.azimuth, c.elevation});
  j["hotspot_centers"] = std::move(hc);
  j["angular_spread"] = s.angular_spread;
  j["cluster_rate"] = s.cluster_rate;
  j["rician_beta"] = s.rician_beta;
  j["pt"] = s.pt;
  j["sigma2"] = s.sigma2;
  j["seed"] = s.seed;
  j["power_law"] = to_string(s.power_law);
  j["reference_power"] = s.reference_power;
  return j;
}

namespace detail {
template <class T>
void read_opt(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
inline void reject_unknown(const ordered_json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail(ErrorKind::config, where, "unknown field '" + it.key() + "'");
  }
}
}  // namespace detail

/// Missing fields keep their defaults; unknown fields are rejected.
inline ScenarioSpec scenario_from_json(const ordered_json& j) {
  const std::string where = "scenario_from_json";
  if (!j.is_object()) fail(ErrorKind::config, where, "scenario must be a JSON object");
  detail::reject_unknown(j,
                         {"n_antennas", "n_users", "region", "wavelength", "paths_per_user", "candidate_count",
                          "hotspot_centers", "angular_spread", "cluster_rate", "rician_beta", "pt", "sigma2", "seed",
                          "power_law", "reference_power"},
                         where);
  try {
    ScenarioSpec s;
    detail::read_opt(j, "n_antennas", s.n_antennas);
    detail::read_opt(j, "n_users", s.n_users);
    detail::read_opt(j, "wavelength", s.wavelength);
    // Region defaults follow the wavelength when not given.
    s.region = {8 * s.wavelength, 8 * s.wavelength, s.wavelength / 2};
    if (j.contains("region")) {
      const auto& r = j.at("region");
      detail::reject_unknown(r, {"sx", "sy", "min_spacing"}, where);
      detail::read_opt(r, "sx", s.region.sx);
      detail::read_opt(r, "sy", s.region.sy);
      detail::read_opt(r, "min_spacing", s.region.min_spacing);
    }
    detail::read_opt(j, "paths_per_user", s.paths_per_user);
    detail::read_opt(j, "candidate_count", s.candidate_count);
    if (j.contains("hotspot_centers"))
      for (const auto& c : j.at("hotspot_centers"))
        s.hotspot_centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    detail::read_opt(j, "angular_spread", s.angular_spread);
    detail::read_opt(j, "cluster_rate", s.cluster_rate);
    detail::read_opt(j, "rician_beta", s.rician_beta);
    detail::read_opt(j, "pt", s.pt);
    detail::read_opt(j, "sigma2", s.sigma2);
    detail::read_opt(j, "seed", s.seed);
    if (j.contains("power_law")) {
      const auto p = j.at("power_law").get<std::string>();
      if (p == "log_uniform_20db")
        s.power_law = PowerLaw::log_uniform_20db;
      else if (p == "equal")
        s.power_law = PowerLaw::equal;
      else if (p == "exponential")
        s.power_law = PowerLaw::exponential;
      else
        fail(ErrorKind::config, where, "unknown power_law '" + p + "'");
    }
    detail::read_opt(j, "reference_power", s.reference_power);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, where, e.what());
  }
}

inline ordered_json to_json(const LagaConfig& c) {
  ordered_json j;
  j["mu0"] = c.mu0;
  j["rho"] = c.rho;
  j["eps_r"] = c.eps_r;
  j["alpha0"] = c.alpha0;
  j["eta"] = c.eta;
  j["inner_iters"] = c.inner_iters;
  j["engine"] = to_string(c.engine);
  j["mc_samples"] = c.mc_samples;
  j["seed"] = c.seed;
  j["max_stages"] = c.max_stages;
  j["penalty_tol"] = c.penalty_tol;
  j["mc_policy"] = c.mc_policy == McSamplingPolicy::fixed_seed ? "fixed_seed" : "per_iteration";
  return j;
}

/// eps_r and alpha0 default to 0.01 and 0.15 wavelengths.
inline LagaConfig laga_from_json(const ordered_json& j, double wavelength) {
  const std::string where = "laga_from_json";
  LagaConfig c = LagaConfig::for_wavelength(wavelength);
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorKind::config, where, "laga must be a JSON object");
  detail::reject_unknown(j,
                         {"mu0", "rho", "eps_r", "alpha0", "eta", "inner_iters", "engine", "mc_samples", "seed",
                          "max_stages", "penalty_tol", "mc_policy"},
                         where);
  try {
    detail::read_opt(j, "mu0", c.mu0);
    detail::read_opt(j, "rho", c.rho);
    detail::read_opt(j, "eps_r", c.eps_r);
    detail::read_opt(j, "alpha0", c.alpha0);
    detail::read_opt(j, "eta", c.eta);
    detail::read_opt(j, "inner_iters", c.inner_iters);
    detail::read_opt(j, "mc_samples", c.mc_samples);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "max_stages", c.max_stages);
    detail::read_opt(j, "penalty_tol", c.penalty_tol);
    if (j.contains("engine")) {
      const auto e = j.at("engine").get<std::string>();
      if (e == "mc")
        c.engine = EngineKind::mc;
      else if (e == "de")
        c.engine = EngineKind::de;
      else
        fail(ErrorKind::config, where, "engine must be 'mc' or 'de'");
    }
    if (j.contains("mc_policy")) {
      const auto p = j.at("mc_policy").get<std::string>();
      if (p == "fixed_seed")
        c.mc_policy = McSamplingPolicy::fixed_seed;
      else if (p == "per_iteration")
        c.mc_policy = McSamplingPolicy::per_iteration;
      else
        fail(ErrorKind::config, where, "mc_policy must be 'fixed_seed' or 'per_iteration'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, where, e.what());
  }
  c.validate();
  return c;
}

/// One row per scheme and realization; failed realizations have empty
/// rate fields.
inline void write_reports_csv(std::ostream& os, const std::vector<EvalReport>& reps, const std::string& hash,
                              bool header = true, std::optional<double> sweep_value = std::nullopt,
                              const std::string& sweep_name = "value") {
  os.precision(17);
  if (header) {
    os << "# config_hash=" << hash << '\n';
    if (sweep_value) os << sweep_name << ',';
    os << "scheme,realization,mean_rate,stderr\n";
  }
  for (const auto& rep : reps) {
    for (const auto& r : rep.realizations) {
      if (sweep_value) os << *sweep_value << ',';
      os << rep.scheme << ',' << r.realization << ',';
      if (r.ok) os << r.mean_rate << ',' << r.stderr_;
      else os << ',';
      os << '\n';
    }
  }
}

inline ordered_json report_summary(const EvalReport& rep) {
  ordered_json j;
  j["scheme"] = rep.scheme;
  j["mean_rate"] = rep.mean_rate;
  j["stderr"] = rep.stderr_;
  j["realizations"] = rep.realizations.size();
  j["failures"] = rep.failures;
  ordered_json rates = ordered_json::array();
  ordered_json layouts = ordered_json::array();
  ordered_json errors = ordered_json::array();
  for (const auto& r : rep.realizations) {
    rates.push_back(r.ok ? ordered_json(r.mean_rate) : ordered_json(nullptr));
    layouts.push_back(r.layout ? to_json(*r.layout) : ordered_json(nullptr));
    if (!r.ok) errors.push_back({{"realization", r.realization}, {"error", r.error}});
  }
  j["rates"] = std::move(rates);
  j["errors"] = std::move(errors);
  j["layouts"] = std::move(layouts);
  return j;
}

inline ordered_json reports_summary(const std::vector<EvalReport>& reps, const std::string& hash) {
  ordered_json j;
  j["config_hash"] = hash;
  j["config"] = reps.empty() ? ordered_json(nullptr) : reps.front().config;
  ordered_json arr = ordered_json::array();
  for (const auto& r : reps) arr.push_back(report_summary(r));
  j["reports"] = std::move(arr);
  return j;
}

}  // namespace maopt
