#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "maopt/barrier.hpp"
#include "maopt/errors.hpp"
#include "maopt/grad_de.hpp"
#include "maopt/grad_mc.hpp"
#include "maopt/types.hpp"

namespace maopt {

/// Anything that can score a layout and return the surrogate gradient.
template <class E>
concept RateEngine = requires(E& e, const E& ce, const AntennaLayout& layout, std::uint64_t it) {
  { ce.rate(layout) } -> std::convertible_to<double>;
  { ce.rate_and_gradient(layout) } -> std::same_as<RateGradient>;
  e.begin_iteration(it);
};

enum class EngineKind { mc, de };

inline std::string to_string(EngineKind e) { return e == EngineKind::mc ? "mc" : "de"; }

struct LagaConfig {
  double mu0 = 1.0;
  double rho = 0.4;
  double eps_r = 0.01;   // meters
  double alpha0 = 0.15;  // meters
  double eta = 0.2;
  int inner_iters = 20;
  EngineKind engine = EngineKind::de;
  int mc_samples = 30;
  std::uint64_t seed = 1;
  McSamplingPolicy mc_policy = McSamplingPolicy::fixed_seed;
  int max_stages = 60;
  // Outer loop also requires |mu L_f| < penalty_tol |rate| before stopping;
  // a value <= 0 keeps only the displacement rule. Once the displacement
  // rule holds, mu jumps directly below that level instead of shrinking by
  // rho stage after stage.
  double penalty_tol = 1e-6;
  NewtonOptions newton{};

  static LagaConfig for_wavelength(double wavelength) {
    LagaConfig c;
    c.eps_r = 0.01 * wavelength;
    c.alpha0 = 0.15 * wavelength;
    return c;
  }

  void validate() const {
    const std::string where = "LagaConfig::validate";
    if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::config, where, "rho must lie in (0, 1)");
    if (!(eta > 0.0 && eta < 1.0)) fail(ErrorKind::config, where, "eta must lie in (0, 1)");
    if (!(alpha0 > 0.0)) fail(ErrorKind::config, where, "alpha0 must be positive");
    if (!(eps_r > 0.0)) fail(ErrorKind::config, where, "eps_r must be positive");
    if (!(mu0 > 0.0)) fail(ErrorKind::config, where, "mu0 must be positive");
    if (inner_iters < 1) fail(ErrorKind::config, where, "inner_iters must be >= 1");
    if (mc_samples < 1) fail(ErrorKind::config, where, "mc_samples must be >= 1");
    if (max_stages < 1) fail(ErrorKind::config, where, "max_stages must be >= 1");
  }
};

struct IterationRecord {
  int stage = 0;
  double mu = 0.0;
  int iter = 0;
  double f_before = 0.0;  // objective at the iterate the step started from
  double f = 0.0;         // objective after the step
  double rate = 0.0;
  double barrier = 0.0;
  double alpha = 0.0;  // accepted step, 0 when backtracking failed
  double grad_norm = 0.0;
  double displacement = 0.0;  // distance from the stage's starting layout
};

struct StageRecord {
  int stage = 0;
  double mu = 0.0;
  double displacement = 0.0;
  double rate = 0.0;
  double barrier = 0.0;
};

struct OptimizerTrace {
  double initial_rate = 0.0;
  double initial_barrier = 0.0;
  std::vector<IterationRecord> iterations;
  std::vector<StageRecord> stages;
  std::vector<AntennaLayout> iterates;  // every accepted layout, initial one first
};

struct LagaResult {
  AntennaLayout layout;
  OptimizerTrace trace;
  double final_rate = 0.0;
  double final_barrier = 0.0;
  double final_mu = 0.0;
};

namespace detail {
inline double layout_distance(const AntennaLayout& a, const AntennaLayout& b) {
  return std::sqrt((a.x - b.x).squaredNorm() + (a.y - b.y).squaredNorm());
}
}  // namespace detail

/// Log-barrier penalized normalized gradient ascent with Armijo
/// backtracking and a shrinking penalty parameter.
template <RateEngine Engine>
LagaResult laga_optimize(const AntennaLayout& init, const MovingRegion& region, Engine& engine, const LagaConfig& cfg) {
  cfg.validate();
  region.validate();
  const auto start_barrier = barrier_value(init, region);
  if (!start_barrier)
    fail(ErrorKind::infeasible_point, "laga_optimizer::laga_optimize", "initial layout is not strictly feasible");

  LagaResult out;
  auto& trace = out.trace;
  AntennaLayout stage_start = init;
  AntennaLayout x = init;
  double mu = cfg.mu0;
  double rate = 0.0;
  double barrier = *start_barrier;
  std::uint64_t global_iter = 0;
  trace.iterates.push_back(init);

  for (int stage = 0; stage < cfg.max_stages; ++stage) {
    for (int i = 0; i < cfg.inner_iters; ++i, ++global_iter) {
      engine.begin_iteration(global_iter);
      const RateGradient rg = engine.rate_and_gradient(x);
      rate = rg.rate;
      barrier = *barrier_value(x, region);
      if (global_iter == 0) {
        trace.initial_rate = rate;
        trace.initial_barrier = barrier;
      }
      const double f = rate + mu * barrier;
      const auto [bx, by] = barrier_gradient(x, region);
      const RVector dx = rg.grad_x + mu * bx;
      const RVector dy = rg.grad_y + mu * by;
      const double dn = std::sqrt(dx.squaredNorm() + dy.squaredNorm());

      IterationRecord rec;
      rec.stage = stage;
      rec.mu = mu;
      rec.iter = i;
      rec.f_before = f;
      rec.f = f;
      rec.rate = rate;
      rec.barrier = barrier;
      rec.grad_norm = dn;

      if (dn > 0.0 && std::isfinite(dn)) {
        const RVector gx = dx / dn;
        const RVector gy = dy / dn;
        for (double alpha = cfg.alpha0; alpha >= 1e-12 * cfg.alpha0; alpha *= 0.5) {
          AntennaLayout trial((x.x + alpha * gx).eval(), (x.y + alpha * gy).eval());
          const auto tb = barrier_value(trial, region);
          if (!tb) continue;
          const double tr = engine.rate(trial);
          const double tf = tr + mu * *tb;
          if (tf >= f + cfg.eta * alpha * dn) {
            x = std::move(trial);
            rate = tr;
            barrier = *tb;
            rec.f = tf;
            rec.rate = tr;
            rec.barrier = *tb;
            rec.alpha = alpha;
            trace.iterates.push_back(x);
            break;
          }
        }
      }
      rec.displacement = detail::layout_distance(x, stage_start);
      trace.iterations.push_back(rec);
    }

    const double displacement = detail::layout_distance(x, stage_start);
    trace.stages.push_back({stage, mu, displacement, rate, barrier});
    out.final_mu = mu;
    stage_start = x;
    const double penalty_limit = cfg.penalty_tol * std::abs(rate);
    const bool penalty_small = cfg.penalty_tol <= 0.0 || std::abs(mu * barrier) < penalty_limit;
    if (displacement < cfg.eps_r && penalty_small) break;
    mu *= cfg.rho;
    // The layout has settled but the penalty term is still visible: drop mu
    // straight to half the level that makes it negligible.
    if (displacement < cfg.eps_r && barrier != 0.0) mu = std::min(mu, 0.5 * penalty_limit / std::abs(barrier));
  }

  out.layout = x;
  out.final_rate = rate;
  out.final_barrier = barrier;
  return out;
}

/// Builds the engine selected in the config and runs the optimizer.
inline LagaResult laga_optimize(const AntennaLayout& init, const MovingRegion& region, const StatisticalCsi& csi,
                                double pt, double sigma2, const LagaConfig& cfg) {
  if (cfg.engine == EngineKind::mc) {
    McEngine engine(csi, pt, sigma2, cfg.mc_samples, cfg.seed, cfg.mc_policy);
    return laga_optimize(init, region, engine, cfg);
  }
  DeEngine engine(csi, pt, sigma2, cfg.newton);
  return laga_optimize(init, region, engine, cfg);
}

/// CSV with one row per inner iteration.
inline void write_trace_csv(std::ostream& os, const OptimizerTrace& trace, const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "stage,mu,iter,f,rate,barrier,alpha,grad_norm,displacement\n";
  os.precision(17);
  for (const auto& r : trace.iterations) {
    os << r.stage << ',' << r.mu << ',' << r.iter << ',' << r.f << ',' << r.rate << ',' << r.barrier << ','
       << r.alpha << ',' << r.grad_norm << ',' << r.displacement << '\n';
  }
}

// ---------------------------------------------------------------------------
// Uniform planar array initializers.

struct GridShape {
  int rows = 1;  // along y
  int cols = 1;  // along x
};

/// rows = largest divisor of n not exceeding sqrt(n).
inline GridShape near_square_grid(int n) {
  if (n < 1) fail(ErrorKind::invalid_input, "near_square_grid", "n must be >= 1");
  int rows = 1;
  for (int d = 1; d * d <= n; ++d)
    if (n % d == 0) rows = d;
  return {rows, n / rows};
}

inline AntennaLayout centered_grid(int n, double spacing_x, double spacing_y) {
  const GridShape g = near_square_grid(n);
  RVector x(n);
  RVector y(n);
  int idx = 0;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c, ++idx) {
      x(idx) = (c - 0.5 * (g.cols - 1)) * spacing_x;
      y(idx) = (r - 0.5 * (g.rows - 1)) * spacing_y;
    }
  }
  return {x, y};
}

inline AntennaLayout upa_dense_init(int n, double wavelength) {
  if (n < 1) fail(ErrorKind::invalid_input, "laga_optimizer::upa_dense_init", "n must be >= 1");
  return centered_grid(n, wavelength / 2.0, wavelength / 2.0);
}

/// Grid with spacing (S_x / cols) * shrink and (S_y / rows) * shrink; it
/// must be strictly feasible for the region.
inline AntennaLayout upa_sparse_init(int n, const MovingRegion& region, double shrink = 1.0) {
  if (n < 1) fail(ErrorKind::invalid_input, "laga_optimizer::upa_sparse_init", "n must be >= 1");
  if (!(shrink > 0.0)) fail(ErrorKind::invalid_input, "laga_optimizer::upa_sparse_init", "shrink must be positive");
  const GridShape g = near_square_grid(n);
  AntennaLayout layout = centered_grid(n, region.sx / g.cols * shrink, region.sy / g.rows * shrink);
  if (!strictly_feasible(layout, region))
    fail(ErrorKind::infeasible_init, "laga_optimizer::upa_sparse_init",
         "sparse UPA is not strictly feasible for this region and spacing");
  return layout;
}

}  // namespace maopt
