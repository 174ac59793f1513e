#pragma once

// Self-check suites shared by `maopt validate` and the acceptance binary.
// Each suite returns one CheckResult; a suite passes only if every instance
// it draws satisfies its tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "maopt/barrier.hpp"
#include "maopt/channel_model.hpp"
#include "maopt/errors.hpp"
#include "maopt/grad_de.hpp"
#include "maopt/grad_mc.hpp"
#include "maopt/laga.hpp"
#include "maopt/oracles.hpp"
#include "maopt/rng.hpp"
#include "maopt/scenario.hpp"
#include "maopt/types.hpp"
#include "maopt/zf_precoding.hpp"

namespace maopt::validation {

enum class Level { quick, full };

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 20240611;
  // Negative control: perturb the water level by 1% after water-filling.
  bool tamper_water_fill = false;
  int jobs = 0;
  std::ostream* log = nullptr;  // progress messages, may be null
};

// ---------------------------------------------------------------------------
// Random instances

namespace gen {

inline double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> u(lo, hi);
  return u(rng);
}

/// Paths in random directions of the visible half space; powers
/// log-uniform in [power_lo, power_hi]; the first path of each user is its
/// LoS path.
inline StatisticalCsi random_csi(Rng& rng, const std::vector<int>& paths_per_user, double wavelength,
                                 double power_lo = 0.1, double power_hi = 1.0) {
  std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> sin_el(-1.0, 0.0);
  StatisticalCsi csi;
  csi.wavelength = wavelength;
  int total = 0;
  for (int lk : paths_per_user) total += lk;
  csi.power = RMatrix::Zero(total, static_cast<Eigen::Index>(paths_per_user.size()));
  int start = 0;
  for (std::size_t k = 0; k < paths_per_user.size(); ++k) {
    const int lk = paths_per_user[k];
    for (int l = 0; l < lk; ++l) {
      const double el = std::asin(sin_el(rng));
      csi.wavevectors.push_back(Wavevector::from_angles(wavelength, el, az(rng)));
      csi.power(start + l, static_cast<Eigen::Index>(k)) = log_uniform(rng, power_lo, power_hi);
    }
    csi.user_path_ranges.push_back({start, start + lk});
    csi.los_index.emplace_back(start);
    start += lk;
  }
  csi.validate();
  return csi;
}

/// Uniform positions inside 90% of the region, redrawn until every pair is
/// at least 1.05 min_spacing apart.
inline AntennaLayout random_layout(Rng& rng, int n, const MovingRegion& region) {
  std::uniform_real_distribution<double> ux(-0.45 * region.sx, 0.45 * region.sx);
  std::uniform_real_distribution<double> uy(-0.45 * region.sy, 0.45 * region.sy);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    RVector x(n);
    RVector y(n);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      x(i) = ux(rng);
      y(i) = uy(rng);
      for (int m = 0; m < i && ok; ++m)
        ok = std::hypot(x(i) - x(m), y(i) - y(m)) > 1.05 * region.min_spacing;
    }
    if (ok) return {x, y};
  }
  fail(ErrorKind::invalid_input, "validation::random_layout", "could not place antennas");
}

}  // namespace gen

namespace detail {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

/// Relative error with a floor so coordinates whose true derivative is
/// near zero are compared on the scale of the whole gradient.
inline double rel_err(double analytic, double fd, double floor) {
  return std::abs(analytic - fd) / std::max(std::abs(fd), floor);
}

inline void note(const Options& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << std::endl;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1. Water-filling KKT conditions and exhaustive-search oracle

inline CheckResult check_water_fill_kkt(const Options& opt, int instances = 1000) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 1);
  int bad_budget = 0, bad_slack = 0, bad_oracle = 0, oracle_checked = 0;
  double worst_budget = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int K = gen::uniform_int(rng, 1, 16);
    RVector c(K);
    for (int k = 0; k < K; ++k) c(k) = gen::log_uniform(rng, 1e-2, 1e2);
    const double pt = gen::log_uniform(rng, 0.1, 10.0);
    const double sigma2 = gen::log_uniform(rng, 1e-2, 1.0);
    WaterFillResult wf = water_fill(c, pt, sigma2);
    if (opt.tamper_water_fill) {
      wf.nu *= 1.01;
      wf.rate = 0.0;
      for (int k : wf.active) {
        wf.p(k) = wf.nu / c(k) - sigma2;
        wf.rate += std::log2(wf.nu / (sigma2 * c(k)));
      }
    }

    double spent = 0.0;
    for (int k = 0; k < K; ++k) spent += c(k) * wf.p(k);
    const double budget_err = std::abs(spent - pt) / pt;
    worst_budget = std::max(worst_budget, budget_err);
    if (budget_err > 1e-9) ++bad_budget;

    bool slack_ok = true;
    std::vector<int> positive;
    for (int k = 0; k < K; ++k) {
      const double floor = sigma2 * c(k);
      if (wf.p(k) > 0.0) {
        positive.push_back(k);
        slack_ok = slack_ok && wf.nu > floor &&
                   std::abs(wf.p(k) - (wf.nu / c(k) - sigma2)) <= 1e-12 * (wf.nu / c(k));
      } else {
        slack_ok = slack_ok && wf.p(k) == 0.0 && wf.nu <= floor;
      }
    }
    slack_ok = slack_ok && positive == wf.active;
    if (!slack_ok) ++bad_slack;

    if (K <= 8) {
      ++oracle_checked;
      const auto ref = oracle::water_fill_enumerate(std::vector<double>(c.data(), c.data() + K), pt, sigma2);
      bool same = std::abs(ref.rate - wf.rate) <= 1e-9 * std::max(1.0, std::abs(ref.rate));
      const double pmax = *std::max_element(ref.p.begin(), ref.p.end());
      for (int k = 0; k < K; ++k) same = same && std::abs(ref.p[k] - wf.p(k)) <= 1e-9 * pmax;
      if (!same) ++bad_oracle;
    }
  }
  CheckResult r;
  r.id = 1;
  r.name = "water-filling KKT and exhaustive-search oracle";
  r.seconds = timer.seconds();
  r.pass = bad_budget == 0 && bad_slack == 0 && bad_oracle == 0 && r.seconds < 5.0;
  r.detail = std::to_string(instances) + " instances; budget violations " + std::to_string(bad_budget) +
             " (worst rel " + detail::fmt(worst_budget) + "), slackness violations " + std::to_string(bad_slack) +
             ", oracle mismatches " + std::to_string(bad_oracle) + "/" + std::to_string(oracle_checked);
  return r;
}

// ---------------------------------------------------------------------------
// 2. dR/dc against central differences

inline CheckResult check_rate_derivative(const Options& opt, int instances = 200) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 2);
  int accepted = 0, skipped = 0, bad = 0;
  double worst = 0.0;
  while (accepted < instances) {
    const int K = gen::uniform_int(rng, 1, 16);
    RVector c(K);
    for (int k = 0; k < K; ++k) c(k) = gen::log_uniform(rng, 1e-2, 1e2);
    const double pt = gen::log_uniform(rng, 0.1, 10.0);
    const double sigma2 = gen::log_uniform(rng, 1e-2, 1.0);
    const WaterFillResult wf = water_fill(c, pt, sigma2);
    bool boundary = false;
    for (int k = 0; k < K; ++k) boundary = boundary || std::abs(wf.nu - sigma2 * c(k)) < 1e-6 * wf.nu;
    if (boundary) {
      ++skipped;
      continue;
    }
    ++accepted;
    const RVector g = rate_gradient_c(wf);
    RVector fd(K);
    for (int k = 0; k < K; ++k) {
      const double h = 1e-7 * c(k);
      RVector cp = c, cm = c;
      cp(k) += h;
      cm(k) -= h;
      fd(k) = (rate_from_c(cp, pt, sigma2) - rate_from_c(cm, pt, sigma2)) / (2 * h);
    }
    const double floor = 1e-6 * fd.cwiseAbs().maxCoeff();
    double inst = 0.0;
    for (int k = 0; k < K; ++k) inst = std::max(inst, detail::rel_err(g(k), fd(k), floor));
    worst = std::max(worst, inst);
    if (inst >= 1e-5) ++bad;
  }
  CheckResult r;
  r.id = 2;
  r.name = "rate derivative in c vs central differences";
  r.seconds = timer.seconds();
  r.pass = bad == 0;
  r.detail = std::to_string(accepted) + " interior instances (" + std::to_string(skipped) +
             " near an active-set boundary skipped); worst rel err " + detail::fmt(worst) + ", failures " +
             std::to_string(bad);
  return r;
}

// ---------------------------------------------------------------------------
// 3. Per-sample position gradient against a loop-based oracle

inline CheckResult check_mc_gradient(const Options& opt, int instances = 50) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 3);
  const double lambda = 0.0598;
  const MovingRegion region{4 * lambda, 4 * lambda, lambda / 2};
  int accepted = 0, skipped = 0, bad = 0;
  double worst = 0.0;
  while (accepted < instances) {
    const int K = gen::uniform_int(rng, 1, 4);
    const int N = gen::uniform_int(rng, std::max(K, 2), 8);
    std::vector<int> lk(K);
    for (auto& l : lk) l = gen::uniform_int(rng, 2, std::max(2, 12 / K));
    const StatisticalCsi csi = gen::random_csi(rng, lk, lambda);
    const AntennaLayout layout = gen::random_layout(rng, N, region);
    const double pt = 1.0;
    const double sigma2 = gen::log_uniform(rng, 1e-3, 1e-1);
    const ChannelSample s = sample_prv(csi, rng);

    RateGradient g;
    try {
      g = instantaneous_rate_gradient(layout, csi, s, pt, sigma2);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::singular_channel) throw;
      ++skipped;
      continue;
    }
    const ChannelSample bound = channel_from_prv(layout, csi, s);
    const GramData gram = gram_inverse_diag(bound.h);
    const WaterFillResult wf = water_fill(gram.c, pt, sigma2);
    bool boundary = gram.condition_estimate > 1e6;
    for (int k = 0; k < K; ++k) boundary = boundary || std::abs(wf.nu - sigma2 * gram.c(k)) < 1e-6 * wf.nu;
    if (boundary) {
      ++skipped;
      continue;
    }
    ++accepted;

    const double h = 1e-6 * lambda;
    RVector fd(2 * N), an(2 * N);
    for (int a = 0; a < 2; ++a)
      for (int n = 0; n < N; ++n) {
        AntennaLayout plus = layout, minus = layout;
        (a == 0 ? plus.x : plus.y)(n) += h;
        (a == 0 ? minus.x : minus.y)(n) -= h;
        fd(a * N + n) = (oracle::zf_rate(plus, csi, s.psi, pt, sigma2) - oracle::zf_rate(minus, csi, s.psi, pt, sigma2)) /
                        (2 * h);
        an(a * N + n) = (a == 0 ? g.grad_x : g.grad_y)(n);
      }
    const double floor = std::max(1e-6 * fd.cwiseAbs().maxCoeff(), 1e-12 * g.rate * kTwoPi / lambda);
    double inst = 0.0;
    for (int i = 0; i < 2 * N; ++i) inst = std::max(inst, detail::rel_err(an(i), fd(i), floor));
    worst = std::max(worst, inst);
    if (inst >= 1e-4) ++bad;
  }
  CheckResult r;
  r.id = 3;
  r.name = "per-sample position gradient vs oracle differences";
  r.seconds = timer.seconds();
  r.pass = bad == 0 && r.seconds < 30.0;
  r.detail = std::to_string(accepted) + " instances (" + std::to_string(skipped) + " skipped); worst rel err " +
             detail::fmt(worst) + ", failures " + std::to_string(bad);
  return r;
}

// ---------------------------------------------------------------------------
// 4. Fixed point of the deterministic equivalent

inline CheckResult check_de_fixed_point(const Options& opt, int instances = 100) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 4);
  const double lambda = 0.0598;
  const MovingRegion region{8 * lambda, 8 * lambda, lambda / 2};
  int bad_newton = 0, bad_residual = 0, bad_diag = 0, bad_c = 0, max_iters = 0;
  double worst_res = 0.0, worst_diag = 0.0;
  std::string first_error;
  for (int i = 0; i < instances; ++i) {
    const int K = gen::uniform_int(rng, 1, 6);
    const int N = gen::uniform_int(rng, std::max(K, 2), 16);
    std::vector<int> lk(K);
    for (auto& l : lk) l = gen::uniform_int(rng, 2, 12);
    const StatisticalCsi csi = gen::random_csi(rng, lk, lambda);
    const AntennaLayout layout = gen::random_layout(rng, N, region);
    const auto g = all_autocorrelations(transmit_frm(layout, csi), csi);
    const auto og = oracle::autocorrelations(layout, csi);
    NewtonOptions no;
    no.polish_iters = 0;  // judge the plain stopping rule
    for (int k = 0; k < K; ++k) {
      NewtonResult nr;
      try {
        nr = newton_epsilon(std::span<const CMatrix>(g), k, no);
      } catch (const Error& e) {
        ++bad_newton;
        if (first_error.empty()) first_error = e.what();
        continue;
      }
      max_iters = std::max(max_iters, nr.iterations);
      const auto res = oracle::fixed_point_residual(og, k, std::vector<double>(nr.epsilon.data(), nr.epsilon.data() + K));
      double norm = 0.0;
      for (double v : res) norm += v * v;
      norm = std::sqrt(norm);
      worst_res = std::max(worst_res, norm);
      if (!(norm < 1e-3) || nr.iterations > 50) ++bad_residual;
    }
    DeSolution sol;
    try {
      sol = c_infinity(std::span<const CMatrix>(g));
    } catch (const Error& e) {
      ++bad_newton;
      if (first_error.empty()) first_error = e.what();
      continue;
    }
    for (int k = 0; k < K; ++k) {
      const double d = std::abs(sol.epsilon(k, k) - sol.c_inf(k)) / sol.c_inf(k);
      worst_diag = std::max(worst_diag, d);
      if (!(d < 1e-6)) ++bad_diag;
      std::vector<double> eps(K);
      for (int j = 0; j < K; ++j) eps[j] = sol.epsilon(k, j);
      const double ref = oracle::c_from_auxiliaries(og, k, eps);
      if (!(std::abs(ref - sol.c_inf(k)) <= 1e-8 * ref)) ++bad_c;
    }
  }

  // Closed forms: one user, and K users with G_i = g I.
  int bad_closed = 0;
  double worst_closed = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int N = gen::uniform_int(rng, 2, 16);
    {
      const StatisticalCsi csi = gen::random_csi(rng, {gen::uniform_int(rng, 1, 12)}, lambda);
      const AntennaLayout layout = gen::random_layout(rng, N, region);
      const auto g = all_autocorrelations(transmit_frm(layout, csi), csi);
      const DeSolution sol = c_infinity(std::span<const CMatrix>(g));
      const double expect = 1.0 / (N * csi.power.sum());
      const double e = std::abs(sol.c_inf(0) - expect) / expect;
      worst_closed = std::max(worst_closed, e);
      if (!(e < 1e-9)) ++bad_closed;
    }
    {
      const int K = gen::uniform_int(rng, 1, N);
      const double gval = gen::log_uniform(rng, 1e-3, 1e3);
      std::vector<CMatrix> g(K, CMatrix::Identity(N, N) * gval);
      const DeSolution sol = c_infinity(std::span<const CMatrix>(g));
      const double expect = oracle::c_infinity_scaled_identity(gval, N, K);
      for (int k = 0; k < K; ++k) {
        const double e = std::abs(sol.c_inf(k) - expect) / expect;
        worst_closed = std::max(worst_closed, e);
        if (!(e < 1e-9)) ++bad_closed;
        for (int j = 0; j < K; ++j) {
          const double ej = std::abs(sol.epsilon(k, j) - expect) / expect;
          worst_closed = std::max(worst_closed, ej);
          if (!(ej < 1e-9)) ++bad_closed;
        }
      }
    }
  }

  CheckResult r;
  r.id = 4;
  r.name = "deterministic-equivalent fixed point";
  r.seconds = timer.seconds();
  r.pass = bad_newton == 0 && bad_residual == 0 && bad_diag == 0 && bad_c == 0 && bad_closed == 0;
  r.detail = std::to_string(instances) + " instances; Newton errors " + std::to_string(bad_newton) +
             ", residual failures " + std::to_string(bad_residual) + " (worst " + detail::fmt(worst_res) +
             ", max iters " + std::to_string(max_iters) + "), eps_kk vs c mismatches " + std::to_string(bad_diag) +
             " (worst " + detail::fmt(worst_diag) + "), oracle c mismatches " + std::to_string(bad_c) +
             ", closed-form mismatches " + std::to_string(bad_closed) + " (worst " + detail::fmt(worst_closed) + ")" +
             (first_error.empty() ? "" : "; first error: " + first_error);
  return r;
}

// ---------------------------------------------------------------------------
// 5. Sampled c against its deterministic equivalent

struct ConsistencyStats {
  double max_dev = 0.0;           // max_k |mean(c_k) - c_inf_k| / c_inf_k
  double max_harmonic_dev = 0.0;  // same with the harmonic mean of c_k
};

inline ConsistencyStats consistency_instance(Rng& rng, int n, int k_users, int paths, int draws, double lambda) {
  const MovingRegion region{8 * lambda, 8 * lambda, lambda / 2};
  std::vector<int> lk(k_users, paths);
  StatisticalCsi csi = gen::random_csi(rng, lk, lambda);
  for (int k = 0; k < k_users; ++k) csi.power.col(k) /= csi.user_power(k);
  const AntennaLayout layout = gen::random_layout(rng, n, region);
  const DeSolution sol = c_infinity(layout, csi);
  const CMatrix q = transmit_frm(layout, csi);
  RVector sum = RVector::Zero(k_users), inv_sum = RVector::Zero(k_users);
  for (int d = 0; d < draws; ++d) {
    const ChannelSample s = channel_from_prv(q, csi, sample_prv(csi, rng));
    const RVector c = gram_inverse_diag(s.h).c;
    sum += c;
    inv_sum += c.cwiseInverse();
  }
  ConsistencyStats st;
  for (int k = 0; k < k_users; ++k) {
    const double mean = sum(k) / draws;
    const double harmonic = draws / inv_sum(k);
    st.max_dev = std::max(st.max_dev, std::abs(mean - sol.c_inf(k)) / sol.c_inf(k));
    st.max_harmonic_dev = std::max(st.max_harmonic_dev, std::abs(harmonic - sol.c_inf(k)) / sol.c_inf(k));
  }
  return st;
}

inline CheckResult check_de_consistency(const Options& opt, int draws = 200, int ensemble = 5) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 5);
  const double lambda = 0.0598;
  std::vector<double> dev_many, dev_few, harm_many;
  for (int e = 0; e < ensemble; ++e) {
    const auto many = consistency_instance(rng, 8, 4, 100, draws, lambda);
    const auto few = consistency_instance(rng, 8, 4, 10, draws, lambda);
    dev_many.push_back(many.max_dev);
    harm_many.push_back(many.max_harmonic_dev);
    dev_few.push_back(few.max_dev);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double worst_many = *std::max_element(dev_many.begin(), dev_many.end());
  const double med_many = median(dev_many);
  const double med_few = median(dev_few);
  CheckResult r;
  r.id = 5;
  r.name = "sampled c vs deterministic equivalent (N=8, K=4)";
  r.seconds = timer.seconds();
  const bool within = worst_many < 0.05;
  const bool shrinking = med_many < med_few;
  r.pass = within && shrinking && r.seconds < 60.0;
  r.detail = std::to_string(ensemble) + " instances x " + std::to_string(draws) +
             " draws; worst |mean(c)-c_inf|/c_inf at 100 paths " + detail::fmt(worst_many) + " (limit 0.05" +
             (within ? ", ok" : ", FAIL") + "); median 100 paths " + detail::fmt(med_many) + " vs 10 paths " +
             detail::fmt(med_few) + (shrinking ? " (ok)" : " (FAIL)") +
             "; diagnostic: harmonic-mean deviation at 100 paths, median " + detail::fmt(median(harm_many));
  return r;
}

// ---------------------------------------------------------------------------
// 6. Position Jacobian of c_inf, and agreement with the sampled gradient

inline CheckResult check_de_gradient(const Options& opt, int instances = 20, int mc_samples = 2000,
                                     int cosine_instances = 2) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 6);
  const double lambda = 0.0598;
  const MovingRegion region{4 * lambda, 4 * lambda, lambda / 2};
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int K = gen::uniform_int(rng, 1, 4);
    const int N = gen::uniform_int(rng, std::max(K, 2), 8);
    std::vector<int> lk(K);
    for (auto& l : lk) l = gen::uniform_int(rng, 2, std::max(2, 12 / K));
    const StatisticalCsi csi = gen::random_csi(rng, lk, lambda);
    const AntennaLayout layout = gen::random_layout(rng, N, region);
    const DeSolution sol = c_infinity(layout, csi);
    const CJacobian jac = c_infinity_jacobian(layout, csi, sol);
    const double h = 1e-5 * lambda;
    double inst = 0.0;
    for (int k = 0; k < K; ++k) {
      RVector fd(2 * N), an(2 * N);
      for (int a = 0; a < 2; ++a)
        for (int n = 0; n < N; ++n) {
          AntennaLayout plus = layout, minus = layout;
          (a == 0 ? plus.x : plus.y)(n) += h;
          (a == 0 ? minus.x : minus.y)(n) -= h;
          fd(a * N + n) = (c_infinity(plus, csi).c_inf(k) - c_infinity(minus, csi).c_inf(k)) / (2 * h);
          an(a * N + n) = (a == 0 ? jac.dx : jac.dy)(k, n);
        }
      // Central differences of c carry rounding noise near eps c / h; entries
      // below 1e4 times that are compared absolutely, which is still about
      // 1e-8 of the natural scale c 2 pi / lambda.
      const double floor = std::max(1e-6 * fd.cwiseAbs().maxCoeff(),
                                    1e4 * std::numeric_limits<double>::epsilon() * sol.c_inf(k) / h);
      for (int j = 0; j < 2 * N; ++j) inst = std::max(inst, detail::rel_err(an(j), fd(j), floor));
    }
    worst = std::max(worst, inst);
    if (!(inst < 1e-3)) ++bad;
  }

  // Users come from the scenario generator (clustered NLoS around a LoS
  // path). With isotropic random paths the ergodic gradient is close to
  // zero and the comparison would only measure sampling noise.
  double min_cos = 1.0;
  for (int i = 0; i < cosine_instances; ++i) {
    ScenarioSpec spec;
    spec.n_antennas = 8;
    spec.n_users = 4;
    spec.paths_per_user = 100;
    spec.candidate_count = 4;
    spec.region = {4 * lambda, 4 * lambda, lambda / 2};
    const StatisticalCsi csi =
        assemble_users(generate_candidates(spec, derive_seed(opt.seed, Stream::validation, 610 + i)), {0, 1, 2, 3});
    const AntennaLayout layout = gen::random_layout(rng, 8, spec.region);
    const double pt = spec.pt, sigma2 = spec.sigma2;
    const RateGradient de = de_gradient(layout, csi, pt, sigma2);
    const RateGradient mc =
        mc_rate_and_gradient(layout, csi, pt, sigma2, mc_samples, derive_seed(opt.seed, Stream::validation, 600 + i));
    const double dot = de.grad_x.dot(mc.grad_x) + de.grad_y.dot(mc.grad_y);
    min_cos = std::min(min_cos, dot / (de.norm() * mc.norm()));
  }
  CheckResult r;
  r.id = 6;
  r.name = "deterministic-equivalent gradient";
  r.seconds = timer.seconds();
  r.pass = bad == 0 && (cosine_instances == 0 || min_cos > 0.95);
  r.detail = std::to_string(instances) + " Jacobian instances, worst rel err " + detail::fmt(worst) + ", failures " +
             std::to_string(bad) +
             (cosine_instances > 0 ? "; min cosine with sampled gradient (M=" + std::to_string(mc_samples) +
                                         ", 100 clustered paths/user) " + detail::fmt(min_cos, 4)
                                   : std::string{});
  return r;
}

// ---------------------------------------------------------------------------
// 7. Optimizer behavior on small two-user problems

/// Two users whose paths cluster around azimuths -60 and +60 degrees.
inline StatisticalCsi toy_csi(Rng& rng, double lambda, int paths = 6) {
  std::normal_distribution<double> spread(0.0, 5.0 * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> power(0.2, 1.0);
  StatisticalCsi csi;
  csi.wavelength = lambda;
  csi.power = RMatrix::Zero(2 * paths, 2);
  for (int k = 0; k < 2; ++k) {
    const double center = (k == 0 ? -60.0 : 60.0) * std::numbers::pi / 180.0;
    for (int l = 0; l < paths; ++l) {
      csi.wavevectors.push_back(Wavevector::from_angles(lambda, -std::numbers::pi / 6 + spread(rng), center + spread(rng)));
      csi.power(k * paths + l, k) = power(rng);
    }
    csi.user_path_ranges.push_back({k * paths, (k + 1) * paths});
    csi.los_index.emplace_back(k * paths);
  }
  csi.validate();
  return csi;
}

inline CheckResult check_laga(const Options& opt, int runs = 10) {
  detail::Timer timer;
  const double lambda = 0.0598;
  const MovingRegion region{3 * lambda, 3 * lambda, lambda / 2};
  int bad_feasible = 0, bad_monotone = 0, bad_penalty = 0, bad_gain = 0;
  double worst_penalty = 0.0;
  for (int run = 0; run < runs; ++run) {
    Rng rng = make_stream(opt.seed, Stream::validation, 700 + static_cast<std::uint64_t>(run));
    const StatisticalCsi csi = toy_csi(rng, lambda);
    const double pt = 1.0, sigma2 = 0.05;
    LagaConfig cfg = LagaConfig::for_wavelength(lambda);
    cfg.engine = EngineKind::de;
    const AntennaLayout init = upa_sparse_init(4, region);
    const LagaResult res = laga_optimize(init, region, csi, pt, sigma2, cfg);

    bool feasible = true;
    for (const auto& it : res.trace.iterates) feasible = feasible && strictly_feasible(it, region);
    if (!feasible) ++bad_feasible;

    bool monotone = true;
    const auto& iters = res.trace.iterations;
    for (std::size_t i = 0; i < iters.size(); ++i) {
      const double tol = 1e-12 * std::max(1.0, std::abs(iters[i].f_before));
      monotone = monotone && iters[i].f >= iters[i].f_before - tol;
      if (i > 0 && iters[i].stage == iters[i - 1].stage) monotone = monotone && iters[i].f >= iters[i - 1].f - tol;
    }
    if (!monotone) ++bad_monotone;

    const double pen = std::abs(res.final_mu * res.final_barrier) / std::abs(res.final_rate);
    worst_penalty = std::max(worst_penalty, pen);
    if (!(pen < 1e-6)) ++bad_penalty;
    if (!(res.final_rate >= res.trace.initial_rate)) ++bad_gain;
  }
  CheckResult r;
  r.id = 7;
  r.name = "optimizer feasibility, monotonicity and penalty decay";
  r.seconds = timer.seconds();
  r.pass = bad_feasible == 0 && bad_monotone == 0 && bad_penalty == 0 && bad_gain == 0;
  r.detail = std::to_string(runs) + " runs; infeasible " + std::to_string(bad_feasible) + ", non-monotone " +
             std::to_string(bad_monotone) + ", penalty too large " + std::to_string(bad_penalty) + " (worst |mu L|/|R| " +
             detail::fmt(worst_penalty) + "), rate decreased " + std::to_string(bad_gain);
  return r;
}

// ---------------------------------------------------------------------------
// 8. Receive-side sums behave like the CSCG path-response model

inline CheckResult check_clt(const Options& opt, int draws = 10000, int receive_paths = 64) {
  detail::Timer timer;
  Rng rng = make_stream(opt.seed, Stream::validation, 8);
  const StatisticalCsi csi = gen::random_csi(rng, {4, 3}, 0.0598);
  double worst_var = 0.0, worst_pseudo = 0.0, worst_cross = 0.0;
  // Cross terms the fixed phase-magnitude matrix itself implies,
  // sum_i Sigma_li conj(Sigma_mi); random phases make these about
  // 1/sqrt(L_r) of sqrt(b_l b_m), so they bound what sampling can reach.
  double population_cross = 0.0;
  for (int k = 0; k < csi.num_users(); ++k) {
    const auto spec = make_receive_side_spec(csi, k, receive_paths, derive_seed(opt.seed, Stream::receive_oracle, k));
    spec.validate(csi);
    const int lt = spec.transmit_paths();
    CMatrix second = CMatrix::Zero(lt, lt);  // E[psi psi^H]
    CVector pseudo = CVector::Zero(lt);      // E[psi_l^2]
    Rng draw_rng = make_stream(opt.seed, Stream::receive_oracle, 100 + static_cast<std::uint64_t>(k));
    for (int d = 0; d < draws; ++d) {
      const CVector psi = receive_side_oracle_sample(spec, csi, k, draw_rng);
      second += psi * psi.adjoint();
      pseudo += psi.cwiseProduct(psi);
    }
    second /= draws;
    pseudo /= draws;
    const auto& range = csi.user_path_ranges[k];
    for (int l = 0; l < lt; ++l) {
      const double b = csi.power(range.start + l, k);
      worst_var = std::max(worst_var, std::abs(second(l, l).real() - b) / b);
      worst_pseudo = std::max(worst_pseudo, std::abs(pseudo(l)) / b);
      for (int m = 0; m < lt; ++m) {
        if (m == l) continue;
        const double bm = csi.power(range.start + m, k);
        worst_cross = std::max(worst_cross, std::abs(second(l, m)) / std::sqrt(b * bm));
        std::complex<double> pop = 0.0;
        for (int i = 0; i < receive_paths; ++i)
          pop += std::polar(spec.prm_magnitudes(l, i), spec.prm_phases(l, i)) *
                 std::polar(spec.prm_magnitudes(m, i), -spec.prm_phases(m, i));
        population_cross = std::max(population_cross, std::abs(pop) / std::sqrt(b * bm));
      }
    }
  }
  CheckResult r;
  r.id = 8;
  r.name = "receive-side sums vs complex Gaussian path responses";
  r.seconds = timer.seconds();
  r.pass = worst_var < 0.10 && worst_pseudo < 0.05 && worst_cross < 0.05;
  r.detail = std::to_string(draws) + " draws, " + std::to_string(receive_paths) +
             " receive paths; worst variance rel err " + detail::fmt(worst_var) + ", worst pseudo-variance ratio " +
             detail::fmt(worst_pseudo) + ", worst cross-correlation ratio " + detail::fmt(worst_cross) +
             "; diagnostic: cross terms implied by the fixed magnitudes " + detail::fmt(population_cross) +
             ", 1/sqrt(L_r) = " + detail::fmt(1.0 / std::sqrt(receive_paths));
  return r;
}

// ---------------------------------------------------------------------------
// 9. Scheme ordering on the default uniform-user scenario

inline std::string gap_text(const std::string& a, const std::string& b, const PairedDifference& d) {
  return a + "-" + b + " " + detail::fmt(d.mean, 4) + " (se " + detail::fmt(d.stderr_, 3) + ")";
}

inline CheckResult check_scheme_ordering(const Options& opt, int realizations = 20) {
  detail::Timer timer;
  ScenarioSpec spec;  // N=16, K=12, S=8 lambda, beta=10, P_T=30 dBm, sigma2=-90 dBm
  spec.seed = opt.seed;
  const LagaConfig laga = LagaConfig::for_wavelength(spec.wavelength);
  ExperimentOptions ex;
  ex.schemes = {Scheme::upa_dense, Scheme::upa_sparse, Scheme::ma_mc, Scheme::ma_de};
  ex.realizations = realizations;
  ex.eval_samples = 100;
  ex.jobs = opt.jobs;
  const auto reps = run_experiment(spec, laga, ex);
  const auto& dense = find_report(reps, Scheme::upa_dense);
  const auto& sparse = find_report(reps, Scheme::upa_sparse);
  const auto& mc = find_report(reps, Scheme::ma_mc);
  const auto& de = find_report(reps, Scheme::ma_de);
  const auto de_mc = paired_difference(de, mc);
  const auto mc_sp = paired_difference(mc, sparse);
  const auto de_sp = paired_difference(de, sparse);
  const auto sp_dn = paired_difference(sparse, dense);
  CheckResult r;
  r.id = 9;
  r.name = "scheme ordering MA-DE ~ MA-MC > UPA-sparse > UPA-dense";
  r.seconds = timer.seconds();
  const bool ok1 = de_mc.mean >= -2.0 * de_mc.stderr_;
  const bool ok2 = mc_sp.exceeds(2.0) && de_sp.exceeds(2.0);
  const bool ok3 = sp_dn.exceeds(2.0);
  r.pass = ok1 && ok2 && ok3 && r.seconds < 900.0;
  r.detail = std::to_string(realizations) + " realizations; means dense " + detail::fmt(dense.mean_rate, 4) +
             ", sparse " + detail::fmt(sparse.mean_rate, 4) + ", MC " + detail::fmt(mc.mean_rate, 4) + ", DE " +
             detail::fmt(de.mean_rate, 4) + "; paired gaps " + gap_text("DE", "MC", de_mc) + ", " +
             gap_text("MC", "sparse", mc_sp) + ", " + gap_text("DE", "sparse", de_sp) + ", " +
             gap_text("sparse", "dense", sp_dn);
  return r;
}

// ---------------------------------------------------------------------------
// 10. Trends along beta, tau and region size

struct TrendOutcome {
  bool pass = true;
  std::string text;
};

/// Along increasing axis values: no step moves against `direction`
/// (+1 non-decreasing, -1 non-increasing) by more than 2 paired standard
/// errors, and the last value is not beyond the first in the wrong
/// direction.
inline TrendOutcome judge_trend(const std::vector<SweepGroup>& groups, Scheme scheme, int direction,
                                const std::string& label) {
  TrendOutcome out;
  std::ostringstream os;
  os << label << " " << to_string(scheme) << ":";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& rep = find_report(groups[i].reports, scheme);
    os << " " << detail::fmt(groups[i].value, 3) << "->" << detail::fmt(rep.mean_rate, 4);
    if (i == 0) continue;
    const auto d = paired_difference(rep, find_report(groups[i - 1].reports, scheme));
    if (direction * d.mean < -2.0 * d.stderr_) out.pass = false;
  }
  const double first = find_report(groups.front().reports, scheme).mean_rate;
  const double last = find_report(groups.back().reports, scheme).mean_rate;
  if (direction * (last - first) < 0.0) out.pass = false;
  os << (out.pass ? " ok" : " FAIL");
  out.text = os.str();
  return out;
}

/// Reduced-size scenarios (N=8, K=4) keep the three sweeps affordable.
inline ScenarioSpec trend_base(std::uint64_t seed) {
  ScenarioSpec s;
  s.n_antennas = 8;
  s.n_users = 4;
  s.seed = seed;
  s.region = {4 * s.wavelength, 4 * s.wavelength, s.wavelength / 2};
  return s;
}

inline ScenarioSpec clustered_scenario(std::uint64_t seed) {
  ScenarioSpec s = trend_base(seed);
  s.candidate_count = 3;
  s.cluster_rate = 1.0 / 3.0;
  const double d = std::numbers::pi / 180.0;
  s.hotspot_centers = {{-120 * d, -20 * d}, {0.0, -30 * d}, {120 * d, -20 * d}};
  return s;
}

inline CheckResult check_trends(const Options& opt, int realizations = 30) {
  detail::Timer timer;
  ExperimentOptions ex;
  ex.realizations = realizations;
  ex.eval_samples = 100;
  ex.jobs = opt.jobs;
  std::vector<TrendOutcome> outcomes;

  {
    const ScenarioSpec spec = clustered_scenario(opt.seed);
    ex.schemes = {Scheme::upa_sparse, Scheme::ma_de};
    const auto g = run_sweep(spec, LagaConfig::for_wavelength(spec.wavelength), ex,
                             {SweepAxis::rician_beta, {1.0, 10.0, 100.0}});
    outcomes.push_back(judge_trend(g, Scheme::ma_de, -1, "beta"));
    outcomes.push_back(judge_trend(g, Scheme::upa_sparse, -1, "beta"));
    detail::note(opt, outcomes.back().text);
  }
  {
    ScenarioSpec spec = trend_base(opt.seed);
    spec.candidate_count = 50;
    ex.schemes = {Scheme::upa_sparse, Scheme::ma_de};
    const auto g =
        run_sweep(spec, LagaConfig::for_wavelength(spec.wavelength), ex, {SweepAxis::cluster_rate, {0.0, 0.5, 1.0}});
    outcomes.push_back(judge_trend(g, Scheme::ma_de, -1, "tau"));
    outcomes.push_back(judge_trend(g, Scheme::upa_sparse, -1, "tau"));
    detail::note(opt, outcomes.back().text);
  }
  {
    ScenarioSpec spec = trend_base(opt.seed);
    spec.candidate_count = 50;
    const double lam = spec.wavelength;
    ex.schemes = {Scheme::ma_mc, Scheme::ma_de};
    const auto g = run_sweep(spec, LagaConfig::for_wavelength(lam), ex,
                             {SweepAxis::region_size, {2 * lam, 4 * lam, 8 * lam}});
    outcomes.push_back(judge_trend(g, Scheme::ma_de, +1, "region"));
    outcomes.push_back(judge_trend(g, Scheme::ma_mc, +1, "region"));
    detail::note(opt, outcomes.back().text);
  }
  CheckResult r;
  r.id = 10;
  r.name = "rate trends in beta, tau and region size";
  r.seconds = timer.seconds();
  r.pass = true;
  for (const auto& o : outcomes) {
    r.pass = r.pass && o.pass;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += o.text;
  }
  r.detail = std::to_string(realizations) + " realizations per point; " + r.detail;
  return r;
}

// ---------------------------------------------------------------------------

/// Runs suite `id` (1-10) with its full-size parameters, or the reduced
/// ones when `quick` is set.
inline CheckResult run_check(int id, const Options& opt, bool quick) {
  switch (id) {
    case 1: return check_water_fill_kkt(opt);
    case 2: return check_rate_derivative(opt);
    case 3: return check_mc_gradient(opt);
    case 4: return check_de_fixed_point(opt);
    case 5: return check_de_consistency(opt);
    case 6: return quick ? check_de_gradient(opt, 20, 500, 1) : check_de_gradient(opt);
    case 7: return check_laga(opt, quick ? 3 : 10);
    case 8: return check_clt(opt);
    case 9: return check_scheme_ordering(opt);
    case 10: return check_trends(opt);
    default: fail(ErrorKind::invalid_input, "validation::run_check", "unknown check id");
  }
}

/// quick: suites 1-4 and 6-8 with reduced optimizer and sampling sizes.
/// full: all ten suites at full size.
inline std::vector<int> suite_ids(Level level) {
  if (level == Level::quick) return {1, 2, 3, 4, 6, 7, 8};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
}

/// Runs the given checks in order; an exception inside a check becomes a
/// failing row instead of aborting the rest.
inline std::vector<CheckResult> run_checks(const std::vector<int>& ids, const Options& opt, bool quick) {
  std::vector<CheckResult> out;
  for (int id : ids) {
    CheckResult r;
    try {
      r = run_check(id, opt, quick);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "suite " + std::to_string(id);
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    detail::note(opt, std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CheckResult> run_suite(Level level, const Options& opt) {
  return run_checks(suite_ids(level), opt, level == Level::quick);
}

inline void print_table(std::ostream& os, const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    os << (r.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.name << "  [" << std::fixed
       << std::setprecision(1) << r.seconds << " s]" << std::defaultfloat << "\n      " << r.detail << "\n";
}

}  // namespace maopt::validation
