#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "maopt/errors.hpp"
#include "maopt/types.hpp"

namespace maopt {

inline constexpr double kSingularConditionLimit = 1e12;

struct GramData {
  CMatrix gram;      // C_H = H^H H
  CMatrix gram_inv;  // C_H^{-1}
  RVector c;         // diag(C_H^{-1})
  double condition_estimate = 1.0;
};

inline GramData gram_inverse_diag(const CMatrix& h) {
  const std::string where = "zf_precoding::gram_inverse_diag";
  const auto N = h.rows();
  const auto K = h.cols();
  if (K < 1) fail(ErrorKind::invalid_input, where, "channel has no users");
  if (K > N) fail(ErrorKind::unsupported_configuration, where, "more users than antennas (K > N)");
  GramData g;
  g.gram = h.adjoint() * h;
  g.gram = (0.5 * (g.gram + g.gram.adjoint())).eval();

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(g.gram);
  if (eig.info() != Eigen::Success) fail(ErrorKind::numeric, where, "eigen-decomposition of the Gram matrix failed");
  const RVector& ev = eig.eigenvalues();
  const double lmax = ev(K - 1);
  const double lmin = ev(0);
  g.condition_estimate = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(g.condition_estimate <= kSingularConditionLimit) || !(lmax > 0.0))
    fail(ErrorKind::singular_channel, where, "users' channels are linearly dependent (condition estimate too large)");

  const CMatrix& v = eig.eigenvectors();
  g.gram_inv = v * ev.cwiseInverse().cast<cdouble>().asDiagonal() * v.adjoint();
  g.c = g.gram_inv.diagonal().real();
  if ((g.c.array() <= 0.0).any()) fail(ErrorKind::numeric, where, "non-positive diagonal of the inverse Gram");
  return g;
}

struct WaterFillResult {
  RVector p;                // power per user (W)
  double nu = 0.0;          // water level (W)
  std::vector<int> active;  // users with p_k > 0, ascending
  double rate = 0.0;        // bits/s/Hz

  bool is_active(int k) const { return std::binary_search(active.begin(), active.end(), k); }
};

/// Water-filling over the ZF c-vector: nu is the root of
/// sum_k (nu - sigma2 c_k)_+ = pt found by bisection on
/// [0, pt + sigma2 max c]. Once the bisection has isolated the active set,
/// nu is recomputed in closed form on that set, which is the same root to
/// machine precision. Users with nu == sigma2 c_k are inactive.
inline WaterFillResult water_fill(const RVector& c, double pt, double sigma2) {
  const std::string where = "zf_precoding::water_fill";
  const auto K = c.size();
  if (K < 1) fail(ErrorKind::invalid_input, where, "empty c-vector");
  if (!(pt > 0.0) || !(sigma2 > 0.0)) fail(ErrorKind::invalid_input, where, "pt and sigma2 must be positive");
  if (!(c.array() > 0.0).all() || !c.allFinite()) fail(ErrorKind::invalid_input, where, "c entries must be positive");

  const RVector floor = sigma2 * c;
  auto excess = [&](double nu) { return (nu - floor.array()).max(0.0).sum() - pt; };

  double lo = 0.0;
  double hi = pt + floor.maxCoeff();
  const double tol = 1e-12 * hi;
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double nu = 0.5 * (lo + hi);

  auto active_at = [&](double level) {
    std::vector<int> a;
    for (Eigen::Index k = 0; k < K; ++k)
      if (level > floor(k)) a.push_back(static_cast<int>(k));
    return a;
  };
  std::vector<int> active = active_at(nu);
  if (!active.empty()) {
    double s = 0.0;
    for (int k : active) s += floor(k);
    const double closed = (pt + s) / static_cast<double>(active.size());
    if (active_at(closed) == active) nu = closed;
    active = active_at(nu);
  }

  WaterFillResult r;
  r.nu = nu;
  r.active = std::move(active);
  r.p = RVector::Zero(K);
  for (int k : r.active) {
    r.p(k) = nu / c(k) - sigma2;
    r.rate += std::log2(nu / floor(k));
  }
  return r;
}

/// Sum rate of ZF with optimal power allocation as a function of c.
inline double rate_from_c(const RVector& c, double pt, double sigma2) { return water_fill(c, pt, sigma2).rate; }

/// dR/dc_k = -p_k / (nu ln 2).
inline RVector rate_gradient_c(const WaterFillResult& wf) {
  return -wf.p / (wf.nu * std::numbers::ln2);
}

/// W = H C_H^{-1} Diag(p)^{1/2}.
inline CMatrix zf_precoder(const CMatrix& h, const WaterFillResult& water) {
  const GramData g = gram_inverse_diag(h);
  if (water.p.size() != h.cols()) fail(ErrorKind::invalid_input, "zf_precoding::zf_precoder", "power vector size != K");
  const RVector sq = water.p.cwiseMax(0.0).cwiseSqrt();
  return h * g.gram_inv * sq.cast<cdouble>().asDiagonal();
}

/// Per-user SINR |h_k^H w_k|^2 / (sigma2 + sum_{i != k} |h_k^H w_i|^2).
inline RVector sinr_check(const CMatrix& h, const CMatrix& w, double sigma2) {
  if (h.rows() != w.rows() || h.cols() != w.cols())
    fail(ErrorKind::invalid_input, "zf_precoding::sinr_check", "H and W must both be N x K");
  const CMatrix a = h.adjoint() * w;  // a(k, i) = h_k^H w_i
  const auto K = h.cols();
  RVector gamma(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double signal = std::norm(a(k, k));
    const double interference = a.row(k).cwiseAbs2().sum() - signal;
    gamma(k) = signal / (sigma2 + interference);
  }
  return gamma;
}

}  // namespace maopt
