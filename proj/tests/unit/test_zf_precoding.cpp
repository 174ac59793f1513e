#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace maopt;
using namespace test_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RVector vec(std::initializer_list<double> v) {
  RVector out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("Gram inverse: identity channel and orthogonal columns", "[zf_precoding]") {
  const GramData g = gram_inverse_diag(CMatrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) CHECK_THAT(g.c(k), WithinAbs(1.0, 1e-15));

  CMatrix h = CMatrix::Zero(4, 2);
  h(0, 0) = 2.0;
  h(2, 1) = cdouble(0.0, 3.0);
  const GramData o = gram_inverse_diag(h);
  CHECK_THAT(o.c(0), WithinRel(0.25, 1e-14));
  CHECK_THAT(o.c(1), WithinRel(1.0 / 9.0, 1e-14));
}

TEST_CASE("Gram inverse matches Gauss-Jordan inversion", "[zf_precoding]") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 1 + trial % 5;
    const CMatrix h = random_complex(rng, K + 3, K);
    const GramData g = gram_inverse_diag(h);
    const auto ref = oracle::c_vector(to_oracle(h));
    for (int k = 0; k < K; ++k) CHECK_THAT(g.c(k), WithinRel(ref[k], 1e-10));
    CHECK((g.gram * g.gram_inv - CMatrix::Identity(K, K)).norm() < 1e-9 * g.condition_estimate);
  }
}

TEST_CASE("Gram inverse: more users than antennas and dependent channels", "[zf_precoding]") {
  Rng rng(2);
  try {
    gram_inverse_diag(random_complex(rng, 2, 3));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_configuration);
  }
  CMatrix h = random_complex(rng, 4, 2);
  h.col(1) = h.col(0) * cdouble(0.5, -1.0);
  try {
    gram_inverse_diag(h);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_channel);
  }
}

TEST_CASE("water-filling closed-form cases", "[zf_precoding]") {
  const WaterFillResult one = water_fill(vec({2.0}), 10.0, 1.0);
  CHECK_THAT(one.nu, WithinRel(12.0, 1e-12));
  CHECK_THAT(one.p(0), WithinRel(5.0, 1e-12));
  CHECK_THAT(one.rate, WithinRel(std::log2(6.0), 1e-12));

  const WaterFillResult two = water_fill(vec({1.0, 1.0}), 4.0, 1.0);
  CHECK_THAT(two.nu, WithinRel(3.0, 1e-12));
  CHECK_THAT(two.p(0), WithinRel(2.0, 1e-12));
  CHECK_THAT(two.p(1), WithinRel(2.0, 1e-12));
  CHECK_THAT(two.rate, WithinRel(2.0 * std::log2(3.0), 1e-12));
}

TEST_CASE("water-filling with an inactive user agrees with active-set enumeration", "[zf_precoding]") {
  const WaterFillResult r = water_fill(vec({1.0, 100.0}), 1.0, 1.0);
  CHECK_THAT(r.nu, WithinRel(2.0, 1e-12));
  CHECK_THAT(r.p(0), WithinRel(1.0, 1e-12));
  CHECK(r.p(1) == 0.0);
  CHECK_FALSE(r.is_active(1));
  const auto ref = oracle::water_fill_enumerate({1.0, 100.0}, 1.0, 1.0);
  CHECK_THAT(r.nu, WithinRel(ref.nu, 1e-12));
  CHECK_THAT(r.rate, WithinRel(ref.rate, 1e-12));
}

TEST_CASE("water-filling: budget, slackness and enumeration oracle on random draws", "[zf_precoding]") {
  Rng rng(3);
  std::uniform_real_distribution<double> lc(-3.0, 3.0);
  std::uniform_int_distribution<int> kd(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = kd(rng);
    RVector c(K);
    for (int k = 0; k < K; ++k) c(k) = std::pow(10.0, lc(rng));
    const double pt = std::pow(10.0, lc(rng));
    const double sigma2 = std::pow(10.0, lc(rng));
    const WaterFillResult r = water_fill(c, pt, sigma2);
    // p_k = nu / c_k - sigma2 cancels when sigma2 c_k dominates pt.
    CHECK_THAT(c.dot(r.p), WithinAbs(pt, 1e-12 * (pt + sigma2 * c.sum())));
    for (int k = 0; k < K; ++k) {
      if (r.nu > sigma2 * c(k)) {
        CHECK(r.p(k) > 0.0);
        CHECK_THAT(r.p(k), WithinRel(r.nu / c(k) - sigma2, 1e-12));
      } else {
        CHECK(r.p(k) == 0.0);
      }
    }
    if (trial % 4 == 0) {
      const auto ref = oracle::water_fill_enumerate(to_std(c), pt, sigma2);
      CHECK_THAT(r.rate, WithinRel(ref.rate, 1e-9));
    }
  }
}

TEST_CASE("rate map: example, scaling law and monotonicity", "[zf_precoding]") {
  CHECK_THAT(rate_from_c(vec({2.0}), 10.0, 1.0), WithinAbs(2.584962500721156, 1e-12));

  Rng rng(4);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + trial % 6;
    RVector c(K);
    for (int k = 0; k < K; ++k) c(k) = u(rng);
    const double pt = 10.0, sigma2 = 0.1;
    const WaterFillResult base = water_fill(c, pt, sigma2);
    const double t = u(rng);
    const WaterFillResult scaled = water_fill(t * c, pt, sigma2);
    if (base.active.size() == static_cast<std::size_t>(K) && scaled.active.size() == static_cast<std::size_t>(K)) {
      // With every user active, rate = sum log2(nu / (sigma2 c_k)) and
      // nu = (pt + sigma2 sum c) / K, so only the c-dependence changes.
      const double expected = base.rate - K * std::log2(t) +
                              K * std::log2((pt + sigma2 * t * c.sum()) / (pt + sigma2 * c.sum()));
      CHECK_THAT(scaled.rate, WithinAbs(expected, 1e-9));
    }
    for (int k = 0; k < K; ++k) {
      RVector up = c;
      up(k) *= 1.0 + u(rng);
      CHECK(rate_from_c(up, pt, sigma2) <= base.rate + 1e-12);
    }
    CHECK(base.rate >= 0.0);
  }
}

TEST_CASE("zero-forcing precoder: interference, power and SINR", "[zf_precoding]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 1 + trial % 4;
    const CMatrix h = random_complex(rng, K + 2, K);
    const double pt = 2.0, sigma2 = 0.3;
    const GramData g = gram_inverse_diag(h);
    const WaterFillResult wf = water_fill(g.c, pt, sigma2);
    const CMatrix w = zf_precoder(h, wf);
    const CMatrix hw = h.adjoint() * w;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        if (i == j)
          CHECK(std::abs(hw(i, i) - std::sqrt(wf.p(i))) < 1e-9);
        else
          CHECK(std::abs(hw(i, j)) < 1e-9);
      }
    CHECK_THAT((w.adjoint() * w).trace().real(), WithinRel(pt, 1e-9));
    const RVector gamma = sinr_check(h, w, sigma2);
    double rate = 0.0;
    for (int k = 0; k < K; ++k) {
      CHECK_THAT(gamma(k), WithinAbs(wf.p(k) / sigma2, 1e-8 * (1.0 + wf.p(k) / sigma2)));
      rate += std::log2(1.0 + gamma(k));
    }
    CHECK_THAT(rate, WithinAbs(wf.rate, 1e-8));
  }
}

TEST_CASE("zero-forcing precoder with orthonormal channel and equal power", "[zf_precoding]") {
  CMatrix h = CMatrix::Zero(3, 3);
  h(0, 1) = 1.0;
  h(1, 2) = 1.0;
  h(2, 0) = 1.0;
  const WaterFillResult wf = water_fill(RVector::Ones(3), 3.0, 1.0);
  const CMatrix w = zf_precoder(h, wf);
  CHECK((w - h * std::sqrt(3.0 / 3.0)).norm() < 1e-12);
}

TEST_CASE("SINR check: zero precoder and a single user", "[zf_precoding]") {
  Rng rng(6);
  const CMatrix h = random_complex(rng, 3, 2);
  CHECK(sinr_check(h, CMatrix::Zero(3, 2), 0.5).isZero());
  const CMatrix h1 = random_complex(rng, 3, 1);
  const CMatrix w1 = random_complex(rng, 3, 1);
  CHECK_THAT(sinr_check(h1, w1, 0.5)(0), WithinRel(std::norm(h1.col(0).dot(w1.col(0))) / 0.5, 1e-12));
}

TEST_CASE("rate derivative in c matches central differences", "[zf_precoding]") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + trial % 5;
    RVector c(K);
    for (int k = 0; k < K; ++k) c(k) = u(rng);
    const WaterFillResult wf = water_fill(c, 3.0, 0.5);
    bool near_boundary = false;
    for (int k = 0; k < K; ++k) near_boundary |= std::abs(wf.nu - 0.5 * c(k)) < 1e-6 * wf.nu;
    if (near_boundary) continue;
    const RVector grad = rate_gradient_c(wf);
    for (int k = 0; k < K; ++k) {
      const double h = 1e-6 * c(k);
      RVector plus = c, minus = c;
      plus(k) += h;
      minus(k) -= h;
      const double fd = (rate_from_c(plus, 3.0, 0.5) - rate_from_c(minus, 3.0, 0.5)) / (2 * h);
      CHECK(std::abs(grad(k) - fd) <= 1e-5 * std::max(std::abs(fd), 1e-6));
    }
  }
}
