#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "maopt/channel_model.hpp"
#include "maopt/errors.hpp"
#include "maopt/grad_mc.hpp"
#include "maopt/types.hpp"
#include "maopt/zf_precoding.hpp"

namespace maopt {

struct NewtonOptions {
  int max_iters = 50;
  double residual_tol = 1e-3;  // ||G_k(eps)||_2
  double step_tol = 1e-3;      // ||eps_i - eps_{i-1}|| / ||eps_i||
  int max_halvings = 30;
  // Once the stopping rule holds, up to polish_iters further Newton steps are
  // taken while the residual is above polish_tol and still decreasing.
  int polish_iters = 6;
  double polish_tol = 1e-13;
};

/// Value and Jacobian of G_k(eps) = eps o t(eps) - 1, where
/// t_l = tr(G_l Y_k^{-1}) and Y_k = I + sum_{i != k} eps_i G_i.
struct NewtonSystem {
  RVector value;
  RMatrix jacobian;
  RVector traces;
  RMatrix cross;  // tr(Y^-1 G_l Y^-1 G_i), column k zeroed
};

/// Evaluates the system from the N x N autocorrelation matrices.
inline NewtonSystem newton_system(std::span<const CMatrix> g, int k, const RVector& eps) {
  const auto K = static_cast<Eigen::Index>(g.size());
  const auto N = g[0].rows();
  CMatrix y = CMatrix::Identity(N, N);
  CMatrix stacked(N, N * K);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (i != k) y += eps(i) * g[i];
    stacked.middleCols(i * N, N) = g[i];
  }
  Eigen::LLT<CMatrix> llt(y);
  if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "grad_de::newton_system", "Y_k is not positive definite");
  const CMatrix p = llt.solve(stacked);  // block l is Y^{-1} G_l

  // tr(Y^-1 G_l Y^-1 G_i) = vec(P_l)^T vec(P_i^T), one product for all pairs.
  CMatrix pv(N * N, K), pt(N * N, K);
  NewtonSystem s;
  s.traces.resize(K);
  for (Eigen::Index l = 0; l < K; ++l) {
    const auto blk = p.middleCols(l * N, N);
    s.traces(l) = blk.trace().real();
    pv.col(l) = blk.reshaped();
    pt.col(l) = blk.transpose().reshaped();
  }
  RMatrix x = (pv.transpose() * pt).real();
  x.col(k).setZero();
  s.value = eps.cwiseProduct(s.traces).array() - 1.0;
  s.jacobian = RMatrix(s.traces.asDiagonal()) - eps.asDiagonal() * x;
  s.cross = std::move(x);
  return s;
}

/// Same system through the L x L form D_k = Q (I + Q^H Diag(B_k eps) Q)^{-1} Q^H:
/// G_k = Diag(eps) B^T diag(D_k) - 1 and
/// J = Diag(B^T diag(D_k)) - Diag(eps) B^T (D_k o D_k^T) B_k.
inline NewtonSystem newton_system_frm(const CMatrix& q, const RMatrix& b, int k, const RVector& eps) {
  const auto N = q.cols();
  RMatrix bk = b;
  bk.col(k).setZero();
  const RVector omega = bk * eps;
  CMatrix y = CMatrix::Identity(N, N) + q.adjoint() * omega.cast<cdouble>().asDiagonal() * q;
  Eigen::LLT<CMatrix> llt(y);
  if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "grad_de::newton_system_frm", "Y_k is not positive definite");
  const CMatrix d = q * llt.solve(CMatrix(q.adjoint()));
  const RMatrix dsq = d.cwiseProduct(d.transpose()).real();
  NewtonSystem s;
  s.traces = b.transpose() * d.diagonal().real();
  s.value = eps.cwiseProduct(s.traces).array() - 1.0;
  s.cross = b.transpose() * dsq * bk;
  s.jacobian = RMatrix(s.traces.asDiagonal()) - eps.asDiagonal() * s.cross;
  return s;
}

struct NewtonResult {
  RVector epsilon;
  double trace_k = 0.0;  // tr(G_k Y_k^{-1}) at the solution
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {
inline RVector newton_direction(const NewtonSystem& s) {
  Eigen::FullPivLU<RMatrix> lu(s.jacobian);
  if (!lu.isInvertible() || !s.jacobian.allFinite())
    fail(ErrorKind::numeric, "grad_de::newton_epsilon", "singular Newton Jacobian");
  return -lu.solve(s.value);
}
}  // namespace detail

/// Damped Newton iteration for eps_k from eps^(0) = 0. A step is halved
/// while it leaves the positive orthant or increases ||G_k||.
inline NewtonResult newton_epsilon(std::span<const CMatrix> g, int k, const NewtonOptions& opt = {}) {
  const std::string where = "grad_de::newton_epsilon";
  const auto K = static_cast<Eigen::Index>(g.size());
  if (K < 1 || k < 0 || k >= K) fail(ErrorKind::invalid_input, where, "user index out of range");
  const auto N = g[0].rows();
  if (K > N) fail(ErrorKind::unsupported_configuration, where, "more users than antennas (K > N)");
  for (const auto& gl : g) {
    if (gl.rows() != N || gl.cols() != N) fail(ErrorKind::invalid_input, where, "autocorrelation matrices must be N x N");
    if (!(gl.trace().real() > 0.0)) fail(ErrorKind::degenerate_scenario, where, "user with zero channel power");
  }

  RVector eps = RVector::Zero(K);
  NewtonSystem sys = newton_system(g, k, eps);
  double res = sys.value.norm();

  auto step = [&]() {
    const RVector dir = detail::newton_direction(sys);
    double t = 1.0;
    for (int h = 0;; ++h) {
      const RVector trial = eps + t * dir;
      const bool positive = trial.allFinite() && (trial.array() > 0.0).all();
      if (positive) {
        NewtonSystem trial_sys = newton_system(g, k, trial);
        const double trial_res = trial_sys.value.norm();
        if (trial_res <= res || h >= opt.max_halvings) {
          const double rel = (trial - eps).norm() / trial.norm();
          eps = trial;
          sys = std::move(trial_sys);
          res = trial_res;
          return rel;
        }
      } else if (h >= opt.max_halvings) {
        fail(ErrorKind::numeric, where, "Newton step cannot stay in the positive orthant");
      }
      t *= 0.5;
    }
  };

  NewtonResult out;
  bool converged = false;
  for (int it = 1; it <= opt.max_iters; ++it) {
    const double rel = step();
    out.iterations = it;
    if (rel < opt.step_tol && res < opt.residual_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError(where, "no convergence within " + std::to_string(opt.max_iters) +
                                      " iterations, residual " + std::to_string(res), res);
  for (int extra = 0; extra < opt.polish_iters && res > opt.polish_tol; ++extra) {
    const double before = res;
    const RVector saved = eps;
    NewtonSystem saved_sys = sys;
    bool ok = true;
    try {
      step();
    } catch (const Error&) {
      ok = false;
    }
    if (!ok || !(res < before)) {
      eps = saved;
      sys = std::move(saved_sys);
      res = before;
      break;
    }
    ++out.iterations;
  }
  out.epsilon = eps;
  out.trace_k = sys.traces(k);
  out.residual = res;
  return out;
}

/// Fixed-point auxiliaries and the deterministic equivalent of c.
struct DeSolution {
  RMatrix epsilon;  // row k holds eps_k
  RVector c_inf;
  std::vector<int> newton_iters;
  RVector residuals;
};

inline DeSolution c_infinity(std::span<const CMatrix> g, const NewtonOptions& opt = {}) {
  const auto K = static_cast<Eigen::Index>(g.size());
  if (K < 1) fail(ErrorKind::invalid_input, "grad_de::c_infinity", "no users");
  DeSolution sol;
  sol.epsilon.resize(K, K);
  sol.c_inf.resize(K);
  sol.residuals.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const NewtonResult r = newton_epsilon(g, static_cast<int>(k), opt);
    sol.epsilon.row(k) = r.epsilon.transpose();
    sol.c_inf(k) = 1.0 / r.trace_k;
    sol.newton_iters.push_back(r.iterations);
    sol.residuals(k) = r.residual;
  }
  return sol;
}

namespace detail {
inline void check_de_input(const AntennaLayout& layout, const StatisticalCsi& csi, const std::string& where) {
  if (csi.num_users() > layout.size())
    fail(ErrorKind::unsupported_configuration, where, "more users than antennas (K > N)");
  for (int k = 0; k < csi.num_users(); ++k)
    if (!(csi.user_power(k) > 0.0)) fail(ErrorKind::degenerate_scenario, where, "user with zero total power");
}
}  // namespace detail

inline DeSolution c_infinity(const AntennaLayout& layout, const StatisticalCsi& csi, const NewtonOptions& opt = {}) {
  detail::check_de_input(layout, csi, "grad_de::c_infinity");
  const std::vector<CMatrix> g = all_autocorrelations(transmit_frm(layout, csi), csi);
  return c_infinity(std::span<const CMatrix>(g), opt);
}

inline double de_rate(const AntennaLayout& layout, const StatisticalCsi& csi, double pt, double sigma2,
                      const NewtonOptions& opt = {}) {
  return rate_from_c(c_infinity(layout, csi, opt).c_inf, pt, sigma2);
}

/// Jacobians dc^inf/dx and dc^inf/dy (K x N each).
struct CJacobian {
  RMatrix dx;
  RMatrix dy;
  const RMatrix& d(Axis a) const { return a == Axis::x ? dx : dy; }
};

/// Analytic position Jacobian of c^inf:
///   dc_k/dv = -(c_k)^2 (R_k^v chi_k + mu_k^v),
///   chi_k = Z_k^T b_k, Z_k = (D_k o D_k^T) B_k,
///   R_k^v = U_k^v Diag(eps_k) J_k^{-T}, U_k^v = 2 Re(F_k^v B), mu_k^v = 2 Re(F_k^v b_k),
///   F_k^v = [(I - D_k Diag(omega_k)) Diag(j kappa^v) Q]^T o E_k,
/// with D_k = Q Y_k^{-1} Q^H, omega_k = B_k eps_k and E_k = Y_k^{-1} Q^H.
/// Users whose weight is zero are skipped when `users` is given.
inline CJacobian c_infinity_jacobian(const AntennaLayout& layout, const StatisticalCsi& csi, const DeSolution& sol,
                                     const std::vector<bool>* users = nullptr) {
  const std::string where = "grad_de::de_gradient";
  const CMatrix q = transmit_frm(layout, csi);
  const RMatrix& b = csi.power;
  const auto N = q.cols();
  const auto K = b.cols();
  CJacobian jac{RMatrix::Zero(K, N), RMatrix::Zero(K, N)};
  const CVector jkx = kJ * csi.kappa(Axis::x).cast<cdouble>();
  const CVector jky = kJ * csi.kappa(Axis::y).cast<cdouble>();

  const std::vector<CMatrix> g = all_autocorrelations(q, csi);

  for (Eigen::Index k = 0; k < K; ++k) {
    if (users && !(*users)[k]) continue;
    const RVector eps = sol.epsilon.row(k).transpose();
    RMatrix bk = b;
    bk.col(k).setZero();
    const RVector omega = bk * eps;
    const CMatrix y = CMatrix::Identity(N, N) + q.adjoint() * omega.cast<cdouble>().asDiagonal() * q;
    Eigen::LLT<CMatrix> llt(y);
    if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, where, "Y_k is not positive definite");
    const CMatrix e = llt.solve(CMatrix(q.adjoint()));  // N x L

    // J_k and chi_k in trace form: B^T (D o D^T) B_k has entries
    // tr(Y^-1 G_l Y^-1 G_i), so the L x L matrix D is never formed.
    const NewtonSystem sys = newton_system(std::span<const CMatrix>(g), static_cast<int>(k), eps);
    const RVector chi = sys.cross.row(k).transpose();

    Eigen::FullPivLU<RMatrix> lu(sys.jacobian.transpose());
    if (!lu.isInvertible()) fail(ErrorKind::numeric, where, "ill-conditioned Newton Jacobian at the solution");
    const RVector s = lu.solve(chi);  // J^{-T} chi
    const double ck = sol.c_inf(k);
    const CMatrix ew = e * omega.cast<cdouble>().asDiagonal();  // Y^-1 Q^H Diag(omega)

    for (Axis a : {Axis::x, Axis::y}) {
      const CVector& jk = a == Axis::x ? jkx : jky;
      const CMatrix sq = jk.asDiagonal() * q;                          // Diag(j kappa) Q
      const CMatrix tm = sq - q * (ew * sq);                           // (I - D Diag(omega)) Diag(j kappa) Q
      const CMatrix f = tm.transpose().cwiseProduct(e);                // N x L
      const RMatrix u = 2.0 * (f * b.cast<cdouble>()).real();          // N x K
      const RVector dc = -ck * ck * (u * eps.asDiagonal() * s + u.col(k));
      (a == Axis::x ? jac.dx : jac.dy).row(k) = dc.transpose();
    }
  }
  return jac;
}

/// grad R(c^inf) = (dc^inf/dv)^T (-p^inf / (nu^inf ln 2)).
inline RateGradient de_gradient(const AntennaLayout& layout, const StatisticalCsi& csi, double pt, double sigma2,
                                const NewtonOptions& opt = {}) {
  const DeSolution sol = c_infinity(layout, csi, opt);
  const WaterFillResult wf = water_fill(sol.c_inf, pt, sigma2);
  const RVector w = rate_gradient_c(wf);
  std::vector<bool> users(csi.num_users());
  for (int k = 0; k < csi.num_users(); ++k) users[k] = w(k) != 0.0;
  const CJacobian jac = c_infinity_jacobian(layout, csi, sol, &users);
  RateGradient out;
  out.rate = wf.rate;
  out.grad_x = jac.dx.transpose() * w;
  out.grad_y = jac.dy.transpose() * w;
  return out;
}

/// Deterministic-equivalent engine for the optimizer.
class DeEngine {
 public:
  DeEngine(StatisticalCsi csi, double pt, double sigma2, NewtonOptions opt = {})
      : csi_(std::move(csi)), pt_(pt), sigma2_(sigma2), opt_(opt) {
    csi_.validate();
  }

  const StatisticalCsi& csi() const { return csi_; }
  void begin_iteration(std::uint64_t) {}
  double rate(const AntennaLayout& layout) const { return de_rate(layout, csi_, pt_, sigma2_, opt_); }
  RateGradient rate_and_gradient(const AntennaLayout& layout) const {
    return de_gradient(layout, csi_, pt_, sigma2_, opt_);
  }

 private:
  StatisticalCsi csi_;
  double pt_;
  double sigma2_;
  NewtonOptions opt_;
};

}  // namespace maopt
