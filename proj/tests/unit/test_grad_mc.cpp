#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"

using namespace maopt;
using namespace test_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Lambda matrices: definition, zero diagonal, Hermitian", "[grad_mc]") {
  StatisticalCsi csi;
  csi.wavelength = kLambda;
  csi.wavevectors = {{1.0, 0.0}, {3.0, 5.0}};
  csi.power = RMatrix::Ones(2, 1);
  csi.user_path_ranges = {{0, 2}};
  const CMatrix lx = lambda_matrix(csi, Axis::x);
  CHECK(lx(0, 0) == cdouble(0.0, 0.0));
  CHECK(lx(0, 1) == cdouble(0.0, -2.0));
  CHECK(lx(1, 0) == cdouble(0.0, 2.0));
  CHECK(lx == lx.adjoint());

  StatisticalCsi one = csi;
  one.wavevectors.resize(1);
  one.power = RMatrix::Ones(1, 1);
  one.user_path_ranges = {{0, 1}};
  CHECK(lambda_matrix(one, Axis::y)(0, 0) == cdouble(0.0, 0.0));

  Rng rng(1);
  const StatisticalCsi r = random_csi(rng, {4, 5});
  const CMatrix ly = lambda_matrix(r, Axis::y);
  CHECK(ly == ly.adjoint());
  CHECK(ly.real().isZero());
}

TEST_CASE("per-sample gradient matches central differences of the oracle rate", "[grad_mc]") {
  Rng rng(2);
  int tested = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int K = 1 + trial % 4;
    const int N = K + 1 + trial % 3;
    std::vector<int> lk(K);
    for (auto& l : lk) l = 2 + trial % 3;
    const StatisticalCsi csi = random_csi(rng, lk);
    const AntennaLayout layout = random_layout(rng, N);
    const ChannelSample s = sample_prv(csi, rng);
    const double pt = 1.0, sigma2 = 0.05;
    const RateGradient g = instantaneous_rate_gradient(layout, csi, s, pt, sigma2);
    const SampleRate sr = sample_rate(channel_from_prv(layout, csi, s).h, pt, sigma2);
    bool boundary = false;
    for (int k = 0; k < K; ++k) boundary |= std::abs(sr.water.nu - sigma2 * sr.gram.c(k)) < 1e-6 * sr.water.nu;
    if (boundary) continue;
    ++tested;
    CHECK_THAT(g.rate, WithinRel(oracle::zf_rate(layout, csi, s.psi, pt, sigma2), 1e-10));
    CHECK(g.max_imag_ratio < 1e-9);
    const double h = 1e-6 * kLambda;
    RVector fd(2 * N), an(2 * N);
    for (int a = 0; a < 2; ++a)
      for (int n = 0; n < N; ++n) {
        AntennaLayout p = layout, m = layout;
        (a ? p.y : p.x)(n) += h;
        (a ? m.y : m.x)(n) -= h;
        fd(a * N + n) = (oracle::zf_rate(p, csi, s.psi, pt, sigma2) - oracle::zf_rate(m, csi, s.psi, pt, sigma2)) / (2 * h);
        an(a * N + n) = (a ? g.grad_y : g.grad_x)(n);
      }
    const double floor = std::max(1e-6 * fd.cwiseAbs().maxCoeff(), 1e-12 * g.rate * kTwoPi / kLambda);
    for (int j = 0; j < 2 * N; ++j) CHECK(std::abs(an(j) - fd(j)) <= 1e-4 * std::max(std::abs(fd(j)), floor));
  }
  CHECK(tested >= 30);
}

TEST_CASE("single antenna: the per-draw gradient averages to zero", "[grad_mc]") {
  // One draw moves |h|^2 with position; only the ergodic rate is flat.
  Rng rng(3);
  const StatisticalCsi csi = random_csi(rng, {5});
  const AntennaLayout layout = random_layout(rng, 1);
  std::vector<double> gx, gy;
  for (int d = 0; d < 4000; ++d) {
    const RateGradient g = instantaneous_rate_gradient(layout, csi, sample_prv(csi, rng), 1.0, 0.1);
    gx.push_back(g.grad_x(0));
    gy.push_back(g.grad_y(0));
  }
  CHECK(std::abs(mean_of(gx)) < 4.0 * standard_error(gx));
  CHECK(std::abs(mean_of(gy)) < 4.0 * standard_error(gy));
}

TEST_CASE("rigid translation leaves the autocorrelations unchanged", "[grad_mc]") {
  Rng rng(4);
  const StatisticalCsi csi = random_csi(rng, {3, 4, 2});
  const AntennaLayout layout = random_layout(rng, 5);
  const AntennaLayout moved = layout.translated(0.37 * kLambda, -1.3 * kLambda);
  const auto a = all_autocorrelations(transmit_frm(layout, csi), csi);
  const auto b = all_autocorrelations(transmit_frm(moved, csi), csi);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK((a[k] - b[k]).norm() < 1e-10 * a[k].norm());
}

TEST_CASE("inactive users add nothing to the gradient weighting", "[grad_mc]") {
  Rng rng(5);
  const StatisticalCsi csi = random_csi(rng, {3, 3});
  const AntennaLayout layout = random_layout(rng, 3);
  // Very low power leaves only the strongest user active.
  for (int d = 0; d < 20; ++d) {
    const ChannelSample s = sample_prv(csi, rng);
    const SampleRate sr = sample_rate(channel_from_prv(layout, csi, s).h, 1e-4, 1.0);
    if (sr.water.active.size() != 1) continue;
    const RVector w = rate_gradient_c(sr.water);
    for (int k = 0; k < 2; ++k)
      if (!sr.water.is_active(k)) CHECK(w(k) == 0.0);
  }
}

TEST_CASE("sampled engine: one draw equals the per-sample gradient", "[grad_mc]") {
  Rng rng(6);
  const StatisticalCsi csi = random_csi(rng, {4, 3});
  const AntennaLayout layout = random_layout(rng, 4);
  const std::uint64_t seed = 1234;
  const RateGradient m1 = mc_rate_and_gradient(layout, csi, 1.0, 0.1, 1, seed);
  Rng child = make_stream(seed, Stream::mc_gradient, 0);
  const RateGradient ref = instantaneous_rate_gradient(layout, csi, sample_prv(csi, child), 1.0, 0.1);
  CHECK(m1.rate == ref.rate);
  CHECK((m1.grad_x - ref.grad_x).norm() <= 1e-12 * ref.grad_x.norm());
  CHECK((m1.grad_y - ref.grad_y).norm() <= 1e-12 * ref.grad_y.norm());
}

TEST_CASE("sampled engine is deterministic for a fixed seed", "[grad_mc]") {
  Rng rng(7);
  const StatisticalCsi csi = random_csi(rng, {4, 3});
  const AntennaLayout layout = random_layout(rng, 4);
  const RateGradient a = mc_rate_and_gradient(layout, csi, 1.0, 0.1, 30, 99);
  const RateGradient b = mc_rate_and_gradient(layout, csi, 1.0, 0.1, 30, 99);
  CHECK(a.rate == b.rate);
  CHECK(a.grad_x == b.grad_x);
  CHECK(a.grad_y == b.grad_y);
}

TEST_CASE("sampled engine: independent large runs agree within 3 standard errors", "[grad_mc]") {
  Rng rng(8);
  const StatisticalCsi csi = random_csi(rng, {3, 3});
  const AntennaLayout layout = random_layout(rng, 3);
  const int m = 2000;
  // Per-draw rates give the standard error of each mean.
  auto run = [&](std::uint64_t seed) {
    std::vector<double> r;
    for (int i = 0; i < m; ++i) {
      Rng child = make_stream(seed, Stream::mc_gradient, static_cast<std::uint64_t>(i));
      r.push_back(sample_rate(channel_from_prv(layout, csi, sample_prv(csi, child)).h, 1.0, 0.1).water.rate);
    }
    return r;
  };
  const auto ra = run(11);
  const auto rb = run(12);
  CHECK_THAT(mc_rate_and_gradient(layout, csi, 1.0, 0.1, m, 11).rate, WithinRel(mean_of(ra), 1e-12));
  const double se = std::hypot(standard_error(ra), standard_error(rb));
  CHECK(std::abs(mean_of(ra) - mean_of(rb)) < 3.0 * se);
}

TEST_CASE("sampled engine: per-iteration policy redraws, fixed policy does not", "[grad_mc]") {
  Rng rng(9);
  const StatisticalCsi csi = random_csi(rng, {4, 3});
  const AntennaLayout layout = random_layout(rng, 4);
  McEngine fixed(csi, 1.0, 0.1, 10, 5, McSamplingPolicy::fixed_seed);
  McEngine fresh(csi, 1.0, 0.1, 10, 5, McSamplingPolicy::per_iteration);
  const double f0 = fixed.rate(layout);
  fixed.begin_iteration(3);
  CHECK(fixed.rate(layout) == f0);
  fresh.begin_iteration(0);
  const double r0 = fresh.rate(layout);
  fresh.begin_iteration(1);
  CHECK(fresh.rate(layout) != r0);
  fresh.begin_iteration(0);
  CHECK(fresh.rate(layout) == r0);
}

TEST_CASE("sampled engine: too many singular draws is a degenerate scenario", "[grad_mc]") {
  // Two users sharing one path have parallel channels in every draw.
  StatisticalCsi csi;
  csi.wavelength = kLambda;
  csi.wavevectors = {{20.0, 10.0}, {20.0, 10.0}};
  csi.power = RMatrix(2, 2);
  csi.power << 1.0, 0.0, 0.0, 1.0;
  csi.user_path_ranges = {{0, 1}, {1, 2}};
  Rng rng(10);
  const AntennaLayout layout = random_layout(rng, 3);
  try {
    mc_rate_and_gradient(layout, csi, 1.0, 0.1, 20, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_scenario);
  }
}
