#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace maopt;
using namespace test_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

AntennaLayout pts(std::initializer_list<std::pair<double, double>> p) {
  RVector x(static_cast<Eigen::Index>(p.size())), y(static_cast<Eigen::Index>(p.size()));
  int i = 0;
  for (auto [a, b] : p) {
    x(i) = a;
    y(i++) = b;
  }
  return {x, y};
}

/// Constant rate and zero gradient everywhere.
struct FlatEngine {
  double rate(const AntennaLayout&) const { return 1.0; }
  RateGradient rate_and_gradient(const AntennaLayout& l) const {
    RateGradient g;
    g.rate = 1.0;
    g.grad_x = RVector::Zero(l.size());
    g.grad_y = RVector::Zero(l.size());
    return g;
  }
  void begin_iteration(std::uint64_t) {}
};

}  // namespace

TEST_CASE("barrier value: worked examples and boundary", "[laga_optimizer]") {
  const MovingRegion unit{2.0, 2.0, 0.5};
  CHECK_THAT(*barrier_value(pts({{0.0, 0.0}}), unit), WithinAbs(0.0, 1e-15));
  CHECK_THAT(*barrier_value(pts({{-0.5, 0.0}, {0.5, 0.0}}), unit), WithinRel(3.0 * std::log(0.75), 1e-14));
  CHECK_FALSE(barrier_value(pts({{0.0, 0.0}, {0.5, 0.0}}), unit).has_value());
  CHECK_FALSE(barrier_value(pts({{1.0, 0.0}}), unit).has_value());
}

TEST_CASE("barrier value matches the reference sum", "[laga_optimizer]") {
  Rng rng(1);
  const MovingRegion region{4 * kLambda, 3 * kLambda, kLambda / 2};
  for (int trial = 0; trial < 20; ++trial) {
    const AntennaLayout l = validation::gen::random_layout(rng, 6, region);
    CHECK_THAT(*barrier_value(l, region), WithinRel(*oracle::barrier(l, region), 1e-12));
  }
}

TEST_CASE("barrier gradient: symmetry, FD agreement, infeasible input", "[laga_optimizer]") {
  const MovingRegion unit{2.0, 2.0, 0.5};
  auto [gx0, gy0] = barrier_gradient(pts({{0.0, 0.0}}), unit);
  CHECK(gx0(0) == 0.0);
  CHECK(gy0(0) == 0.0);
  auto [gx, gy] = barrier_gradient(pts({{-0.4, 0.1}, {0.4, -0.1}}), unit);
  CHECK_THAT(gx(0), WithinAbs(-gx(1), 1e-14));

  Rng rng(2);
  const MovingRegion region{4 * kLambda, 4 * kLambda, kLambda / 2};
  for (int trial = 0; trial < 10; ++trial) {
    const AntennaLayout l = validation::gen::random_layout(rng, 5, region);
    auto [bx, by] = barrier_gradient(l, region);
    const double h = 1e-8 * region.sx;
    for (int a = 0; a < 2; ++a)
      for (int n = 0; n < 5; ++n) {
        AntennaLayout p = l, m = l;
        (a ? p.y : p.x)(n) += h;
        (a ? m.y : m.x)(n) -= h;
        const double fd = (*oracle::barrier(p, region) - *oracle::barrier(m, region)) / (2 * h);
        const double an = (a ? by : bx)(n);
        CHECK(std::abs(an - fd) <= 1e-5 * std::max(std::abs(fd), 1.0 / region.sx));
      }
  }
  try {
    barrier_gradient(pts({{0.0, 0.0}, {0.5, 0.0}}), unit);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible_point);
  }
}

TEST_CASE("UPA initializers", "[laga_optimizer]") {
  const AntennaLayout dense = upa_dense_init(16, 1.0);
  for (int n = 0; n < 16; ++n) {
    CHECK((std::abs(std::abs(dense.x(n)) - 0.25) < 1e-15 || std::abs(std::abs(dense.x(n)) - 0.75) < 1e-15));
    CHECK((std::abs(std::abs(dense.y(n)) - 0.25) < 1e-15 || std::abs(std::abs(dense.y(n)) - 0.75) < 1e-15));
  }
  const AntennaLayout single = upa_dense_init(1, 1.0);
  CHECK(single.x(0) == 0.0);
  CHECK(single.y(0) == 0.0);
  const GridShape g6 = near_square_grid(6);
  CHECK(g6.rows == 2);
  CHECK(g6.cols == 3);
  const AntennaLayout six = upa_dense_init(6, 1.0);
  CHECK_THAT(six.x.mean(), WithinAbs(0.0, 1e-15));
  CHECK_THAT(six.y.mean(), WithinAbs(0.0, 1e-15));

  const double lam = 1.0;
  const MovingRegion big{8 * lam, 8 * lam, lam / 2};
  const AntennaLayout sparse = upa_sparse_init(16, big);
  for (int n = 0; n < 16; ++n) {
    const double ax = std::abs(sparse.x(n));
    CHECK((std::abs(ax - 1.0) < 1e-14 || std::abs(ax - 3.0) < 1e-14));
  }
  CHECK(strictly_feasible(sparse, big));
  CHECK_THAT(min_pairwise_distance(sparse), WithinRel(2.0, 1e-14));

  const MovingRegion small{2 * lam, 2 * lam, lam / 2};
  for (double shrink : {1.0, 0.98}) {
    try {
      upa_sparse_init(16, small, shrink);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible_init);
    }
  }
}

TEST_CASE("zero gradient engine stops after one stage without moving", "[laga_optimizer]") {
  const MovingRegion region{4 * kLambda, 4 * kLambda, kLambda / 2};
  const AntennaLayout init = pts({{0.0, 0.0}});
  FlatEngine engine;
  LagaConfig cfg = LagaConfig::for_wavelength(kLambda);
  cfg.penalty_tol = 0.0;
  const LagaResult r = laga_optimize(init, region, engine, cfg);
  CHECK(r.layout.x == init.x);
  CHECK(r.layout.y == init.y);
  CHECK(r.trace.stages.size() == 1);
}

TEST_CASE("optimizer on a toy scenario: feasibility, Armijo condition, penalty decay", "[laga_optimizer]") {
  Rng rng(3);
  const StatisticalCsi csi = validation::toy_csi(rng, kLambda);
  const MovingRegion region{3 * kLambda, 3 * kLambda, kLambda / 2};
  const AntennaLayout init = upa_sparse_init(4, region, 0.8);
  LagaConfig cfg = LagaConfig::for_wavelength(kLambda);
  DeEngine engine(csi, 1.0, 0.05);
  const LagaResult r = laga_optimize(init, region, engine, cfg);

  for (const auto& it : r.trace.iterates) CHECK(strictly_feasible(it, region));
  for (const auto& rec : r.trace.iterations) {
    if (rec.alpha > 0.0) {
      CHECK(rec.f - rec.f_before >= cfg.eta * rec.alpha * rec.grad_norm - 1e-12);
      CHECK(rec.alpha <= cfg.alpha0);
    }
  }
  // Accepted steps move each antenna by at most alpha.
  std::size_t idx = 1;
  for (const auto& rec : r.trace.iterations) {
    if (rec.alpha <= 0.0) continue;
    const auto& a = r.trace.iterates[idx - 1];
    const auto& b = r.trace.iterates[idx];
    for (int n = 0; n < 4; ++n) CHECK(std::hypot(a.x(n) - b.x(n), a.y(n) - b.y(n)) <= rec.alpha * (1 + 1e-12));
    ++idx;
  }
  CHECK(std::abs(r.final_mu * r.final_barrier) < 1e-6 * std::abs(r.final_rate));
  CHECK(r.final_rate >= r.trace.initial_rate);
  CHECK(r.trace.stages.back().displacement < cfg.eps_r);
}

TEST_CASE("optimizer rejects an infeasible start and a bad config", "[laga_optimizer]") {
  const MovingRegion region{2.0, 2.0, 0.5};
  FlatEngine engine;
  LagaConfig cfg = LagaConfig::for_wavelength(1.0);
  try {
    laga_optimize(pts({{0.0, 0.0}, {0.2, 0.0}}), region, engine, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible_point);
  }
  cfg.rho = 1.5;
  try {
    laga_optimize(pts({{0.0, 0.0}}), region, engine, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("sampled-engine optimization stays feasible and improves the surrogate", "[laga_optimizer]") {
  Rng rng(4);
  const StatisticalCsi csi = validation::toy_csi(rng, kLambda);
  const MovingRegion region{3 * kLambda, 3 * kLambda, kLambda / 2};
  LagaConfig cfg = LagaConfig::for_wavelength(kLambda);
  cfg.engine = EngineKind::mc;
  cfg.mc_samples = 20;
  cfg.seed = 8;
  const LagaResult r = laga_optimize(upa_sparse_init(4, region, 0.8), region, csi, 1.0, 0.05, cfg);
  for (const auto& it : r.trace.iterates) CHECK(strictly_feasible(it, region));
  CHECK(r.final_rate >= r.trace.initial_rate);
}

TEST_CASE("trace CSV layout", "[laga_optimizer]") {
  OptimizerTrace t;
  IterationRecord rec;
  rec.stage = 1;
  rec.mu = 0.4;
  rec.iter = 2;
  rec.f = 3.5;
  t.iterations.push_back(rec);
  std::ostringstream os;
  write_trace_csv(os, t, "config_hash=abc");
  const std::string s = os.str();
  CHECK(s.rfind("# config_hash=abc\nstage,mu,iter,f,rate,barrier,alpha,grad_norm,displacement\n", 0) == 0);
  CHECK(s.find("\n1,0.40000000000000002,2,3.5,") != std::string::npos);
}
