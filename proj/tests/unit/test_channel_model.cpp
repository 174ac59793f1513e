#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace maopt;
using namespace test_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

StatisticalCsi single_path_csi(double kx, double ky, double b = 1.0) {
  StatisticalCsi csi;
  csi.wavelength = kLambda;
  csi.wavevectors = {{kx, ky}};
  csi.power = RMatrix::Constant(1, 1, b);
  csi.user_path_ranges = {{0, 1}};
  csi.los_index = {0};
  return csi;
}

}  // namespace

TEST_CASE("field-response matrix: antenna at the origin gives ones", "[channel_model]") {
  Rng rng(1);
  const StatisticalCsi csi = random_csi(rng, {3, 4});
  const CMatrix q = transmit_frm(AntennaLayout(RVector::Zero(1), RVector::Zero(1)), csi);
  REQUIRE(q.rows() == 7);
  REQUIRE(q.cols() == 1);
  for (int l = 0; l < 7; ++l) CHECK(std::abs(q(l, 0) - cdouble(1.0, 0.0)) < 1e-15);
}

TEST_CASE("field-response matrix: half-wavelength offset flips the phase", "[channel_model]") {
  const StatisticalCsi csi = single_path_csi(kTwoPi / kLambda, 0.0);
  RVector x(1), y(1);
  x << kLambda / 2;
  y << 0.0;
  const CMatrix q = transmit_frm({x, y}, csi);
  CHECK_THAT(q(0, 0).real(), WithinAbs(-1.0, 1e-14));
  CHECK_THAT(q(0, 0).imag(), WithinAbs(0.0, 1e-14));
}

TEST_CASE("field-response matrix matches per-entry evaluation", "[channel_model]") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const StatisticalCsi csi = random_csi(rng, {5, 2, 3});
    const AntennaLayout layout = random_layout(rng, 6);
    const CMatrix q = transmit_frm(layout, csi);
    for (int l = 0; l < csi.num_paths(); ++l)
      for (int n = 0; n < layout.size(); ++n) {
        const double phase = layout.x(n) * csi.wavevectors[l].kx + layout.y(n) * csi.wavevectors[l].ky;
        CHECK(std::abs(q(l, n) - cdouble(std::cos(phase), std::sin(phase))) < 1e-14);
        CHECK_THAT(std::abs(q(l, n)), WithinAbs(1.0, 1e-14));
      }
  }
}

TEST_CASE("path responses: block structure, zero power and determinism", "[channel_model]") {
  Rng rng(3);
  StatisticalCsi csi = random_csi(rng, {3, 2});
  csi.power(1, 0) = 0.0;
  const ChannelSample a = sample_prv(csi, 99);
  const ChannelSample b = sample_prv(csi, 99);
  CHECK(a.psi == b.psi);
  CHECK(a.psi(1, 0) == cdouble(0.0, 0.0));
  for (int l = 3; l < 5; ++l) CHECK(a.psi(l, 0) == cdouble(0.0, 0.0));
  for (int l = 0; l < 3; ++l) CHECK(a.psi(l, 1) == cdouble(0.0, 0.0));
  CHECK(a.psi(0, 0) != cdouble(0.0, 0.0));
}

TEST_CASE("path responses: moments of a b=2 entry", "[channel_model]") {
  StatisticalCsi csi = single_path_csi(1.0, 0.0, 2.0);
  Rng rng(4);
  const int draws = 100000;
  cdouble mean = 0.0;
  double sum_re2 = 0.0, sum_re = 0.0;
  for (int d = 0; d < draws; ++d) {
    const cdouble v = sample_prv(csi, rng).psi(0, 0);
    mean += v;
    sum_re += v.real();
    sum_re2 += v.real() * v.real();
  }
  mean /= draws;
  // Standard deviation of the mean modulus is about sqrt(2 / draws).
  CHECK(std::abs(mean) < 4.0 * std::sqrt(2.0 / draws));
  const double var_re = sum_re2 / draws - std::pow(sum_re / draws, 2);
  CHECK_THAT(var_re, WithinRel(1.0, 0.05));
}

TEST_CASE("channel: single antenna at the origin sums the path responses", "[channel_model]") {
  Rng rng(5);
  const StatisticalCsi csi = random_csi(rng, {4, 3});
  const ChannelSample s = channel_from_prv(AntennaLayout(RVector::Zero(1), RVector::Zero(1)), csi, sample_prv(csi, 7));
  for (int k = 0; k < 2; ++k) CHECK(std::abs(s.h(0, k) - s.psi.col(k).sum()) < 1e-14);
}

TEST_CASE("channel: one path with unit response is the conjugated field response", "[channel_model]") {
  const StatisticalCsi csi = single_path_csi(30.0, -12.0);
  Rng rng(6);
  const AntennaLayout layout = random_layout(rng, 3);
  ChannelSample s;
  s.psi = CMatrix::Constant(1, 1, 1.0);
  s = channel_from_prv(layout, csi, s);
  const CMatrix q = transmit_frm(layout, csi);
  for (int n = 0; n < 3; ++n) CHECK(std::abs(s.h(n, 0) - std::conj(q(0, n))) < 1e-15);
}

TEST_CASE("channel matches an independent loop product", "[channel_model]") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const StatisticalCsi csi = random_csi(rng, {3, 5, 2});
    const AntennaLayout layout = random_layout(rng, 5);
    const ChannelSample s = channel_from_prv(layout, csi, sample_prv(csi, rng));
    const oracle::Mat ref = oracle::channel(layout, csi, s.psi);
    for (int n = 0; n < 5; ++n)
      for (int k = 0; k < 3; ++k) CHECK(std::abs(s.h(n, k) - ref(n, k)) <= 1e-12 * std::abs(ref(n, k)) + 1e-14);
  }
}

TEST_CASE("channel: dimension mismatch is an invalid-input error", "[channel_model]") {
  Rng rng(8);
  const StatisticalCsi csi = random_csi(rng, {3, 2});
  ChannelSample bad;
  bad.psi = CMatrix::Zero(4, 2);
  try {
    channel_from_prv(random_layout(rng, 3), csi, bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
}

TEST_CASE("autocorrelation: Hermitian, PSD, trace N times the user power", "[channel_model]") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const StatisticalCsi csi = random_csi(rng, {4, 6});
    const AntennaLayout layout = random_layout(rng, 5);
    const auto ref = oracle::autocorrelations(layout, csi);
    for (int k = 0; k < 2; ++k) {
      const CMatrix g = user_autocorrelation(layout, csi, k);
      CHECK((g - g.adjoint()).norm() < 1e-12 * g.norm());
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * g.trace().real());
      CHECK_THAT(g.trace().real(), WithinRel(5.0 * csi.user_power(k), 1e-12));
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) CHECK(std::abs(g(i, j) - ref[k](i, j)) < 1e-12 * g.trace().real());
    }
  }
}

TEST_CASE("autocorrelation: trace example and single-path rank one", "[channel_model]") {
  StatisticalCsi csi;
  csi.wavelength = kLambda;
  csi.wavevectors = {{10.0, 3.0}, {-40.0, 20.0}, {5.0, -70.0}};
  csi.power = RMatrix(3, 1);
  csi.power << 1.0, 1.5, 0.5;
  csi.user_path_ranges = {{0, 3}};
  csi.los_index = {0};
  Rng rng(10);
  const AntennaLayout layout = random_layout(rng, 4);
  CHECK_THAT(user_autocorrelation(layout, csi, 0).trace().real(), WithinRel(12.0, 1e-12));

  csi.power << 2.0, 0.0, 0.0;
  const CMatrix g = user_autocorrelation(layout, csi, 0);
  const CVector qt = transmit_frm(layout, csi).row(0).transpose();
  CHECK((g - 2.0 * qt.conjugate() * qt.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
  CHECK(eig.eigenvalues()(2) < 1e-12);
}

TEST_CASE("autocorrelation matches the sample covariance of the channel", "[channel_model]") {
  Rng rng(11);
  const StatisticalCsi csi = random_csi(rng, {5});
  const AntennaLayout layout = random_layout(rng, 4);
  const CMatrix q = transmit_frm(layout, csi);
  CMatrix acc = CMatrix::Zero(4, 4);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const ChannelSample s = channel_from_prv(q, csi, sample_prv(csi, rng));
    acc += s.h.col(0) * s.h.col(0).adjoint();
  }
  acc /= draws;
  const CMatrix g = user_autocorrelation(layout, csi, 0);
  const double scale = g.trace().real() / 4.0;
  CHECK((acc - g).cwiseAbs().maxCoeff() < 0.05 * scale);
}

TEST_CASE("Rician rescaling: fixed point, worked example and conservation", "[channel_model]") {
  StatisticalCsi one;
  one.wavelength = kLambda;
  one.wavevectors = {{1.0, 0.0}, {0.0, 1.0}};
  one.power = RMatrix(2, 1);
  one.power << 1.0, 1.0;
  one.user_path_ranges = {{0, 2}};
  one.los_index = {0};
  const std::vector<StatisticalCsi> ens{one};

  const auto same = rician_scaling(1.0, ens);
  CHECK_THAT(same.los_gain, WithinAbs(1.0, 1e-15));
  CHECK_THAT(same.nlos_gain, WithinAbs(1.0, 1e-15));
  CHECK(rician_rescale(one, 1.0, ens).power == one.power);

  const auto s10 = rician_scaling(10.0, ens);
  CHECK_THAT(s10.los_gain, WithinRel(20.0 / 11.0, 1e-14));
  CHECK_THAT(s10.nlos_gain, WithinRel(2.0 / 11.0, 1e-14));

  Rng rng(12);
  std::vector<StatisticalCsi> ensemble;
  for (int i = 0; i < 30; ++i) ensemble.push_back(random_csi(rng, {4, 6}));
  const double beta = 7.5;
  double before = 0.0, los = 0.0, nlos = 0.0, after = 0.0;
  for (const auto& c : ensemble) {
    const StatisticalCsi r = rician_rescale(c, beta, ensemble);
    for (int k = 0; k < c.num_users(); ++k) {
      before += c.user_power(k);
      after += r.user_power(k);
      const double pl = r.power(*r.los_index[k], k);
      los += pl;
      nlos += r.user_power(k) - pl;
    }
  }
  CHECK_THAT(after, WithinRel(before, 1e-9));
  CHECK_THAT(los / nlos, WithinRel(beta, 1e-9));
}

TEST_CASE("Rician rescaling without NLoS power is degenerate", "[channel_model]") {
  StatisticalCsi csi;
  csi.wavelength = kLambda;
  csi.wavevectors = {{1.0, 0.0}};
  csi.power = RMatrix::Constant(1, 1, 1.0);
  csi.user_path_ranges = {{0, 1}};
  csi.los_index = {0};
  const std::vector<StatisticalCsi> ens{csi};
  try {
    rician_rescale(csi, 10.0, ens);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_scenario);
  }
}

TEST_CASE("receive-side oracle: one receive path has unit modulus", "[channel_model]") {
  Rng rng(13);
  StatisticalCsi csi = random_csi(rng, {3});
  csi.power.setOnes();
  const ReceiveSideSpec spec = make_receive_side_spec(csi, 0, 1, 5);
  spec.validate(csi);
  for (int d = 0; d < 20; ++d) {
    const CVector psi = receive_side_oracle_sample(spec, csi, 0, rng);
    for (int l = 0; l < 3; ++l) CHECK_THAT(std::abs(psi(l)), WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("receive-side oracle: PRM row powers match the path powers", "[channel_model]") {
  Rng rng(14);
  const StatisticalCsi csi = random_csi(rng, {4, 3});
  for (int k = 0; k < 2; ++k) {
    const ReceiveSideSpec spec = make_receive_side_spec(csi, k, 64, 100 + k);
    spec.validate(csi);
    for (int l = 0; l < spec.transmit_paths(); ++l)
      CHECK_THAT(spec.prm_magnitudes.row(l).squaredNorm(),
                 WithinAbs(csi.power(csi.user_path_ranges[k].start + l, k), 1e-12));
  }
}

TEST_CASE("receive-side oracle: higher moments approach the Gaussian values", "[channel_model]") {
  // Normalized fourth moment E|psi|^4 / (E|psi|^2)^2 is 2 for CSCG; the
  // deviation shrinks as receive paths are added.
  Rng rng(15);
  const StatisticalCsi csi = random_csi(rng, {6});
  std::vector<double> median_dev;
  for (int lr : {4, 16, 64}) {
    const ReceiveSideSpec spec = make_receive_side_spec(csi, 0, lr, 200 + lr);
    std::vector<double> m2(6, 0.0), m4(6, 0.0);
    Rng draw = make_stream(1, Stream::receive_oracle, lr);
    const int draws = 20000;
    for (int d = 0; d < draws; ++d) {
      const CVector psi = receive_side_oracle_sample(spec, csi, 0, draw);
      for (int l = 0; l < 6; ++l) {
        const double a = std::norm(psi(l));
        m2[l] += a;
        m4[l] += a * a;
      }
    }
    std::vector<double> dev;
    for (int l = 0; l < 6; ++l) dev.push_back(std::abs(m4[l] / draws / std::pow(m2[l] / draws, 2) - 2.0));
    std::sort(dev.begin(), dev.end());
    median_dev.push_back(0.5 * (dev[2] + dev[3]));
  }
  CHECK(median_dev[0] > median_dev[1]);
  CHECK(median_dev[1] > median_dev[2]);
}
