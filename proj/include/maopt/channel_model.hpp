#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "maopt/errors.hpp"
#include "maopt/rng.hpp"
#include "maopt/types.hpp"

namespace maopt {

/// Transmit field-response matrix Q (L x N); column n holds
/// exp(j r_n^T kappa_l) for every path l.
inline CMatrix transmit_frm(const AntennaLayout& layout, const StatisticalCsi& csi) {
  const int L = csi.num_paths();
  const int N = layout.size();
  CMatrix q(L, N);
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      const auto& w = csi.wavevectors[l];
      q(l, n) = std::polar(1.0, layout.x(n) * w.kx + layout.y(n) * w.ky);
    }
  }
  return q;
}

/// Draws the block-diagonal path-response matrix Psi. In-block entries are
/// CSCG with Re and Im i.i.d. N(0, b/2); everything else is exactly zero.
inline ChannelSample sample_prv(const StatisticalCsi& csi, Rng& rng) {
  const int L = csi.num_paths();
  const int K = csi.num_users();
  ChannelSample s;
  s.psi = CMatrix::Zero(L, K);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < K; ++k) {
    const auto& r = csi.user_path_ranges[k];
    for (int l = r.start; l < r.end; ++l) {
      const double re = normal(rng);
      const double im = normal(rng);
      const double b = csi.power(l, k);
      if (b > 0.0) {
        const double sd = std::sqrt(b / 2.0);
        s.psi(l, k) = {sd * re, sd * im};
      }
    }
  }
  return s;
}

inline ChannelSample sample_prv(const StatisticalCsi& csi, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prv(csi, rng);
}

/// Fills sample.h = Q^H Psi, using the block structure of Psi.
inline ChannelSample channel_from_prv(const CMatrix& q, const StatisticalCsi& csi, ChannelSample sample) {
  const int L = csi.num_paths();
  const int K = csi.num_users();
  if (sample.psi.rows() != L || sample.psi.cols() != K || q.rows() != L)
    fail(ErrorKind::invalid_input, "channel_from_prv", "Psi must be L x K and Q must have L rows");
  const int N = static_cast<int>(q.cols());
  sample.h.resize(N, K);
  for (int k = 0; k < K; ++k) {
    const auto& r = csi.user_path_ranges[k];
    sample.h.col(k).noalias() = q.middleRows(r.start, r.size()).adjoint() * sample.psi.col(k).segment(r.start, r.size());
  }
  return sample;
}

inline ChannelSample channel_from_prv(const AntennaLayout& layout, const StatisticalCsi& csi, ChannelSample sample) {
  return channel_from_prv(transmit_frm(layout, csi), csi, std::move(sample));
}

/// G_k = Q^H Diag(b_k) Q, restricted to user k's path block.
inline CMatrix user_autocorrelation(const CMatrix& q, const StatisticalCsi& csi, int k) {
  if (k < 0 || k >= csi.num_users()) fail(ErrorKind::invalid_input, "user_autocorrelation", "user index out of range");
  const auto& r = csi.user_path_ranges[k];
  const auto qk = q.middleRows(r.start, r.size());
  const RVector b = csi.power.col(k).segment(r.start, r.size());
  CMatrix g = qk.adjoint() * (b.cast<cdouble>().asDiagonal() * qk);
  // Exact Hermitian symmetry; the product is only Hermitian up to rounding.
  g = (0.5 * (g + g.adjoint())).eval();
  return g;
}

inline CMatrix user_autocorrelation(const AntennaLayout& layout, const StatisticalCsi& csi, int k) {
  return user_autocorrelation(transmit_frm(layout, csi), csi, k);
}

inline std::vector<CMatrix> all_autocorrelations(const CMatrix& q, const StatisticalCsi& csi) {
  std::vector<CMatrix> g;
  g.reserve(csi.num_users());
  for (int k = 0; k < csi.num_users(); ++k) g.push_back(user_autocorrelation(q, csi, k));
  return g;
}

// ---------------------------------------------------------------------------
// Rician rescaling

struct RicianScaling {
  double los_gain = 1.0;   // eta_LoS^2
  double nlos_gain = 1.0;  // eta_NLoS^2
  double mean_los = 0.0;   // expected LoS power before scaling
  double mean_nlos = 0.0;  // expected NLoS power before scaling
};

/// Site-expected LoS and NLoS powers are averaged over every user of every
/// CSI in the ensemble; the scaling keeps their sum and sets their ratio to
/// beta.
inline RicianScaling rician_scaling(double beta, std::span<const StatisticalCsi> ensemble) {
  const std::string where = "rician_rescale";
  if (ensemble.empty()) fail(ErrorKind::invalid_input, where, "ensemble must not be empty");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorKind::invalid_input, where, "beta must be positive");
  double los = 0.0;
  double nlos = 0.0;
  std::size_t users = 0;
  for (const auto& csi : ensemble) {
    if (static_cast<int>(csi.los_index.size()) != csi.num_users())
      fail(ErrorKind::invalid_input, where, "every ensemble user needs a los_index");
    for (int k = 0; k < csi.num_users(); ++k) {
      if (!csi.los_index[k]) fail(ErrorKind::invalid_input, where, "every ensemble user needs a los_index");
      const double p_los = csi.power(*csi.los_index[k], k);
      los += p_los;
      nlos += csi.user_power(k) - p_los;
      ++users;
    }
  }
  RicianScaling s;
  s.mean_los = los / static_cast<double>(users);
  s.mean_nlos = nlos / static_cast<double>(users);
  if (!(s.mean_los > 0.0) || !(s.mean_nlos > 0.0))
    fail(ErrorKind::degenerate_scenario, where, "expected LoS or NLoS power is zero");
  const double total = s.mean_los + s.mean_nlos;
  s.los_gain = total / s.mean_los * beta / (1.0 + beta);
  s.nlos_gain = total / s.mean_nlos / (1.0 + beta);
  return s;
}

inline StatisticalCsi apply_rician_scaling(StatisticalCsi csi, const RicianScaling& s) {
  for (int k = 0; k < csi.num_users(); ++k) {
    if (static_cast<int>(csi.los_index.size()) <= k || !csi.los_index[k])
      fail(ErrorKind::invalid_input, "rician_rescale", "user without a los_index");
    const auto& r = csi.user_path_ranges[k];
    for (int l = r.start; l < r.end; ++l) csi.power(l, k) *= (l == *csi.los_index[k]) ? s.los_gain : s.nlos_gain;
  }
  return csi;
}

inline StatisticalCsi rician_rescale(const StatisticalCsi& csi, double beta, std::span<const StatisticalCsi> ensemble) {
  return apply_rician_scaling(csi, rician_scaling(beta, ensemble));
}

// ---------------------------------------------------------------------------
// Receive-side oracle: draws path responses as explicit sums over receive
// paths, the quantity the CSCG model approximates.

enum class ReceivePhaseModel {
  iid_uniform,  // rho_i i.i.d. uniform on [0, 2 pi)
  geometric,    // rho_i = u^T kappa_i^r with u uniform in the local disc
};

struct ReceiveSideSpec {
  int user = 0;
  RMatrix prm_magnitudes;  // L_k^t x L_k^r, |Sigma_{k,li}|
  RMatrix prm_phases;      // L_k^t x L_k^r, arg Sigma_{k,li}
  std::vector<std::array<double, 3>> receive_wavevectors;
  double local_radius = 0.0;
  ReceivePhaseModel phase_model = ReceivePhaseModel::iid_uniform;

  int receive_paths() const { return static_cast<int>(prm_magnitudes.cols()); }
  int transmit_paths() const { return static_cast<int>(prm_magnitudes.rows()); }

  void validate(const StatisticalCsi& csi) const {
    const std::string where = "ReceiveSideSpec::validate";
    if (user < 0 || user >= csi.num_users()) fail(ErrorKind::invalid_input, where, "user out of range");
    const auto& r = csi.user_path_ranges[user];
    if (transmit_paths() != r.size() || prm_phases.rows() != prm_magnitudes.rows() ||
        prm_phases.cols() != prm_magnitudes.cols() || receive_paths() < 1)
      fail(ErrorKind::invalid_input, where, "PRM must be L_k^t x L_k^r");
    if (static_cast<int>(receive_wavevectors.size()) != receive_paths())
      fail(ErrorKind::invalid_input, where, "need one receive wavevector per receive path");
    if ((prm_magnitudes.array() < 0.0).any()) fail(ErrorKind::invalid_input, where, "PRM magnitudes must be >= 0");
    for (int l = 0; l < transmit_paths(); ++l) {
      const double target = csi.power(r.start + l, user);
      const double got = prm_magnitudes.row(l).squaredNorm();
      if (std::abs(got - target) > 1e-9 * std::max(1.0, target))
        fail(ErrorKind::invalid_input, where, "PRM row power does not match the angular power spectrum");
    }
  }
};

/// Builds a receive-side description for user k whose per-row power matches
/// b_k: random positive weights normalized per row, independent uniform PRM
/// phases and random 3D receive directions.
inline ReceiveSideSpec make_receive_side_spec(const StatisticalCsi& csi, int k, int receive_paths, std::uint64_t seed,
                                              double local_radius_wavelengths = 5.0) {
  if (receive_paths < 1) fail(ErrorKind::invalid_input, "make_receive_side_spec", "need at least one receive path");
  const auto& r = csi.user_path_ranges.at(k);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  ReceiveSideSpec spec;
  spec.user = k;
  spec.local_radius = local_radius_wavelengths * csi.wavelength;
  spec.prm_magnitudes.resize(r.size(), receive_paths);
  spec.prm_phases.resize(r.size(), receive_paths);
  for (int l = 0; l < r.size(); ++l) {
    double sum = 0.0;
    for (int i = 0; i < receive_paths; ++i) {
      spec.prm_magnitudes(l, i) = receive_paths == 1 ? 1.0 : 0.5 + expo(rng);
      sum += spec.prm_magnitudes(l, i) * spec.prm_magnitudes(l, i);
      spec.prm_phases(l, i) = kTwoPi * unit(rng);
    }
    spec.prm_magnitudes.row(l) *= std::sqrt(csi.power(r.start + l, k) / sum);
  }
  const double kr = kTwoPi / csi.wavelength;
  for (int i = 0; i < receive_paths; ++i) {
    const double el = std::asin(2.0 * unit(rng) - 1.0);
    const double az = kTwoPi * unit(rng);
    spec.receive_wavevectors.push_back(
        {kr * std::cos(el) * std::cos(az), kr * std::cos(el) * std::sin(az), kr * std::sin(el)});
  }
  return spec;
}

/// psi_{kl} = sum_i Sigma_{k,li} exp(j rho_i); one draw of the receive phases.
inline CVector receive_side_oracle_sample(const ReceiveSideSpec& spec, const StatisticalCsi& csi, int k, Rng& rng) {
  if (k != spec.user) fail(ErrorKind::invalid_input, "receive_side_oracle_sample", "spec belongs to another user");
  (void)csi;
  const int lr = spec.receive_paths();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CVector rx(lr);
  if (spec.phase_model == ReceivePhaseModel::iid_uniform) {
    for (int i = 0; i < lr; ++i) rx(i) = std::polar(1.0, kTwoPi * unit(rng));
  } else {
    const double rad = spec.local_radius * std::sqrt(unit(rng));
    const double ang = kTwoPi * unit(rng);
    const double ux = rad * std::cos(ang);
    const double uy = rad * std::sin(ang);
    for (int i = 0; i < lr; ++i) {
      const auto& w = spec.receive_wavevectors[i];
      rx(i) = std::polar(1.0, ux * w[0] + uy * w[1]);
    }
  }
  CVector out(spec.transmit_paths());
  for (int l = 0; l < spec.transmit_paths(); ++l) {
    cdouble acc = 0.0;
    for (int i = 0; i < lr; ++i) acc += std::polar(spec.prm_magnitudes(l, i), spec.prm_phases(l, i)) * rx(i);
    out(l) = acc;
  }
  return out;
}

inline CVector receive_side_oracle_sample(const ReceiveSideSpec& spec, const StatisticalCsi& csi, int k,
                                          std::uint64_t seed) {
  Rng rng(seed);
  return receive_side_oracle_sample(spec, csi, k, rng);
}

}  // namespace maopt
