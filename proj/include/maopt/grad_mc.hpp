#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "maopt/channel_model.hpp"
#include "maopt/errors.hpp"
#include "maopt/rng.hpp"
#include "maopt/types.hpp"
#include "maopt/zf_precoding.hpp"

namespace maopt {

/// Surrogate ergodic rate and its gradient w.r.t. antenna coordinates.
struct RateGradient {
  double rate = 0.0;
  RVector grad_x;
  RVector grad_y;
  // Largest |Im| / (1 + |Re|) over the Hermitian quadratic forms whose real
  // part was kept.
  double max_imag_ratio = 0.0;
  int resampled = 0;

  const RVector& grad(Axis a) const { return a == Axis::x ? grad_x : grad_y; }
  double norm() const { return std::sqrt(grad_x.squaredNorm() + grad_y.squaredNorm()); }
};

/// Lambda^v(i, l) = j (kappa_i^v - kappa_l^v).
inline CMatrix lambda_matrix(const StatisticalCsi& csi, Axis axis) {
  const RVector k = csi.kappa(axis);
  const auto L = k.size();
  CMatrix lam(L, L);
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index i = 0; i < L; ++i) lam(i, l) = cdouble(0.0, k(i) - k(l));
  return lam;
}

/// Per-sample ZF quantities needed for the rate and its gradient.
struct SampleRate {
  GramData gram;
  WaterFillResult water;
};

inline SampleRate sample_rate(const CMatrix& h, double pt, double sigma2) {
  SampleRate s;
  s.gram = gram_inverse_diag(h);
  s.water = water_fill(s.gram.c, pt, sigma2);
  return s;
}

namespace detail {

// grad entry n = (-1 / (nu ln2)) q_n^H (F o Lambda^v) q_n with
// F = Psi C^{-1} Diag(p) C^{-1} Psi^H.
inline RateGradient gradient_from_sample(const CMatrix& q, const CMatrix& psi, const SampleRate& s,
                                         const CMatrix& lambda_x, const CMatrix& lambda_y) {
  const auto N = q.cols();
  RateGradient out;
  out.rate = s.water.rate;
  const CMatrix xi = psi * s.gram.gram_inv;  // L x K, columns xi_k
  const CMatrix f = xi * s.water.p.cast<cdouble>().asDiagonal() * xi.adjoint();
  const double scale = -1.0 / (s.water.nu * std::numbers::ln2);
  for (Axis a : {Axis::x, Axis::y}) {
    const CMatrix& lam = a == Axis::x ? lambda_x : lambda_y;
    const CMatrix fq = f.cwiseProduct(lam) * q;  // L x N
    RVector g(N);
    for (Eigen::Index n = 0; n < N; ++n) {
      const cdouble form = q.col(n).dot(fq.col(n));  // q_n^H (F o Lambda) q_n
      out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(form.imag()) / (1.0 + std::abs(form.real())));
      g(n) = scale * form.real();
    }
    (a == Axis::x ? out.grad_x : out.grad_y) = std::move(g);
  }
  return out;
}

}  // namespace detail

/// Rate and exact gradient of R_ZF = R(c(x, y)) for one channel sample.
inline RateGradient instantaneous_rate_gradient(const AntennaLayout& layout, const StatisticalCsi& csi,
                                                const ChannelSample& sample, double pt, double sigma2) {
  const CMatrix q = transmit_frm(layout, csi);
  const ChannelSample bound = channel_from_prv(q, csi, ChannelSample{sample.psi, {}});
  const SampleRate s = sample_rate(bound.h, pt, sigma2);
  return detail::gradient_from_sample(q, bound.psi, s, lambda_matrix(csi, Axis::x), lambda_matrix(csi, Axis::y));
}

enum class McSamplingPolicy {
  fixed_seed,     // the same M draws for every evaluation of a run
  per_iteration,  // fresh draws for every optimizer iteration
};

/// Monte-Carlo rate/gradient engine. Path-response draws do not depend on
/// the layout, so the M base draws are generated once per seed and reused.
/// A draw whose Gram matrix is singular at the queried layout is replaced by
/// a draw from the resample stream; more than 10% replacements is an error.
class McEngine {
 public:
  McEngine(StatisticalCsi csi, double pt, double sigma2, int samples, std::uint64_t seed,
           McSamplingPolicy policy = McSamplingPolicy::fixed_seed)
      : csi_(std::move(csi)), pt_(pt), sigma2_(sigma2), samples_(samples), seed_(seed), policy_(policy) {
    if (samples_ < 1) fail(ErrorKind::invalid_input, "grad_mc::McEngine", "sample count must be >= 1");
    csi_.validate();
    lambda_x_ = lambda_matrix(csi_, Axis::x);
    lambda_y_ = lambda_matrix(csi_, Axis::y);
    draw_base(seed_);
  }

  const StatisticalCsi& csi() const { return csi_; }
  int samples() const { return samples_; }

  void begin_iteration(std::uint64_t iteration) {
    if (policy_ != McSamplingPolicy::per_iteration) return;
    draw_base(derive_seed(seed_, Stream::mc_iteration, iteration));
  }

  double rate(const AntennaLayout& layout) const { return evaluate(layout, false).rate; }

  RateGradient rate_and_gradient(const AntennaLayout& layout) const { return evaluate(layout, true); }

  /// Mean rate and gradient over the M draws, accumulated in index order.
  RateGradient evaluate(const AntennaLayout& layout, bool with_gradient) const {
    const CMatrix q = transmit_frm(layout, csi_);
    const auto N = layout.size();
    RateGradient acc;
    acc.grad_x = RVector::Zero(N);
    acc.grad_y = RVector::Zero(N);
    int resampled = 0;
    std::uint64_t resample_index = 0;
    for (int m = 0; m < samples_; ++m) {
      ChannelSample s = channel_from_prv(q, csi_, ChannelSample{base_[m], {}});
      SampleRate sr;
      for (;;) {
        try {
          sr = sample_rate(s.h, pt_, sigma2_);
          break;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::singular_channel) throw;
          ++resampled;
          if (10 * resampled > samples_)
            fail(ErrorKind::degenerate_scenario, "grad_mc::mc_rate_and_gradient",
                 "more than 10% of channel draws had a singular Gram matrix");
          Rng rng = make_stream(active_seed_, Stream::mc_resample, resample_index++);
          s = channel_from_prv(q, csi_, sample_prv(csi_, rng));
        }
      }
      if (with_gradient) {
        const RateGradient g = detail::gradient_from_sample(q, s.psi, sr, lambda_x_, lambda_y_);
        acc.rate += g.rate;
        acc.grad_x += g.grad_x;
        acc.grad_y += g.grad_y;
        acc.max_imag_ratio = std::max(acc.max_imag_ratio, g.max_imag_ratio);
      } else {
        acc.rate += sr.water.rate;
      }
    }
    const double inv = 1.0 / samples_;
    acc.rate *= inv;
    acc.grad_x *= inv;
    acc.grad_y *= inv;
    acc.resampled = resampled;
    return acc;
  }

 private:
  void draw_base(std::uint64_t seed) {
    active_seed_ = seed;
    base_.clear();
    base_.reserve(samples_);
    for (int m = 0; m < samples_; ++m) {
      Rng rng = make_stream(seed, Stream::mc_gradient, static_cast<std::uint64_t>(m));
      base_.push_back(sample_prv(csi_, rng).psi);
    }
  }

  StatisticalCsi csi_;
  double pt_;
  double sigma2_;
  int samples_;
  std::uint64_t seed_;
  std::uint64_t active_seed_ = 0;
  McSamplingPolicy policy_;
  CMatrix lambda_x_;
  CMatrix lambda_y_;
  std::vector<CMatrix> base_;
};

/// Arithmetic mean of per-sample rates and gradients over m draws from the
/// seed's child streams.
inline RateGradient mc_rate_and_gradient(const AntennaLayout& layout, const StatisticalCsi& csi, double pt,
                                         double sigma2, int m, std::uint64_t seed) {
  return McEngine(csi, pt, sigma2, m, seed).rate_and_gradient(layout);
}

}  // namespace maopt
