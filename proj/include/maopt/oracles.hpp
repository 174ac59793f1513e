#pragma once

// Reference implementations used only to check the main code paths. They
// avoid Eigen and share no helpers with the modules under test: plain
// nested loops, Gauss-Jordan elimination and exhaustive active-set search.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "maopt/types.hpp"

namespace maopt::oracle {

using cx = std::complex<double>;

/// Dense row-major complex matrix.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<cx> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  cx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  cx operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

inline Mat identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline Mat multiply(const Mat& x, const Mat& y) {
  Mat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const cx v = x(i, k);
      for (int j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
    }
  return out;
}

inline Mat adjoint(const Mat& x) {
  Mat out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(j, i) = std::conj(x(i, j));
  return out;
}

/// Gauss-Jordan with partial pivoting.
inline Mat inverse(Mat m) {
  const int n = m.rows;
  Mat inv = identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    if (std::abs(m(piv, col)) == 0.0) throw std::runtime_error("oracle::inverse: singular matrix");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(m(col, j), m(piv, j));
        std::swap(inv(col, j), inv(piv, j));
      }
    const cx d = m(col, col);
    for (int j = 0; j < n; ++j) {
      m(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const cx f = m(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        m(r, j) -= f * m(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

inline cx trace(const Mat& m) {
  cx t = 0.0;
  for (int i = 0; i < m.rows; ++i) t += m(i, i);
  return t;
}

/// H(n, k) = sum_l conj(exp(j r_n . kappa_l)) psi(l, k).
inline Mat channel(const AntennaLayout& layout, const StatisticalCsi& csi, const CMatrix& psi) {
  const int n_ant = layout.size();
  const int K = csi.num_users();
  const int L = csi.num_paths();
  Mat h(n_ant, K);
  for (int n = 0; n < n_ant; ++n)
    for (int k = 0; k < K; ++k) {
      cx s = 0.0;
      for (int l = 0; l < L; ++l) {
        const double phase = layout.x(n) * csi.wavevectors[l].kx + layout.y(n) * csi.wavevectors[l].ky;
        s += cx(std::cos(phase), -std::sin(phase)) * psi(l, k);
      }
      h(n, k) = s;
    }
  return h;
}

inline std::vector<double> c_vector(const Mat& h) {
  const Mat inv = inverse(multiply(adjoint(h), h));
  std::vector<double> c(h.cols);
  for (int k = 0; k < h.cols; ++k) c[k] = inv(k, k).real();
  return c;
}

struct Allocation {
  std::vector<double> p;
  double nu = 0.0;
  double rate = -std::numeric_limits<double>::infinity();
};

/// Best power allocation over every non-empty support set: on a support A
/// the budget fixes nu = (pt + sigma2 sum_A c) / |A|, and the support is
/// admissible only if every p_k on it is positive. Exponential in K.
inline Allocation water_fill_enumerate(const std::vector<double>& c, double pt, double sigma2) {
  const int K = static_cast<int>(c.size());
  if (K > 20) throw std::runtime_error("oracle::water_fill_enumerate: K too large");
  Allocation best;
  for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
    double s = 0.0;
    int count = 0;
    for (int k = 0; k < K; ++k)
      if (mask & (1u << k)) {
        s += sigma2 * c[k];
        ++count;
      }
    const double nu = (pt + s) / count;
    bool admissible = true;
    std::vector<double> p(K, 0.0);
    double rate = 0.0;
    for (int k = 0; k < K && admissible; ++k) {
      if (!(mask & (1u << k))) continue;
      p[k] = nu / c[k] - sigma2;
      if (!(p[k] > 0.0)) admissible = false;
      rate += std::log2(1.0 + p[k] / sigma2);
    }
    if (admissible && rate > best.rate) best = {p, nu, rate};
  }
  return best;
}

/// Sum rate of ZF with optimal power for one path-response draw.
inline double zf_rate(const AntennaLayout& layout, const StatisticalCsi& csi, const CMatrix& psi, double pt,
                      double sigma2) {
  return water_fill_enumerate(c_vector(channel(layout, csi, psi)), pt, sigma2).rate;
}

/// G_k(n, m) = sum_l b_lk conj(q_ln) q_lm, q_ln = exp(j r_n . kappa_l).
inline std::vector<Mat> autocorrelations(const AntennaLayout& layout, const StatisticalCsi& csi) {
  const int n_ant = layout.size();
  std::vector<Mat> out;
  for (int k = 0; k < csi.num_users(); ++k) {
    Mat g(n_ant, n_ant);
    for (int l = 0; l < csi.num_paths(); ++l) {
      const double b = csi.power(l, k);
      if (b == 0.0) continue;
      for (int n = 0; n < n_ant; ++n)
        for (int m = 0; m < n_ant; ++m) {
          const auto& w = csi.wavevectors[l];
          const double pn = layout.x(n) * w.kx + layout.y(n) * w.ky;
          const double pm = layout.x(m) * w.kx + layout.y(m) * w.ky;
          g(n, m) += b * cx(std::cos(pm - pn), std::sin(pm - pn));
        }
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Residual eps_l tr(G_l Y_k^{-1}) - 1 for every l, with
/// Y_k = I + sum_{i != k} eps_i G_i.
inline std::vector<double> fixed_point_residual(const std::vector<Mat>& g, int k, const std::vector<double>& eps) {
  const int n = g[0].rows;
  Mat y = identity(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) y(r, c) += eps[i] * g[i](r, c);
  }
  const Mat yi = inverse(y);
  std::vector<double> res(g.size());
  for (std::size_t l = 0; l < g.size(); ++l) res[l] = eps[l] * trace(multiply(g[l], yi)).real() - 1.0;
  return res;
}

/// tr(G_k Y_k^{-1})^{-1} for the given auxiliaries.
inline double c_from_auxiliaries(const std::vector<Mat>& g, int k, const std::vector<double>& eps) {
  const int n = g[0].rows;
  Mat y = identity(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) y(r, c) += eps[i] * g[i](r, c);
  }
  return 1.0 / trace(multiply(g[k], inverse(y))).real();
}

/// Equal autocorrelations g I for all K users: by symmetry eps_i = e for
/// i != k with e N g = 1 + (K - 1) e g, which gives c = 1 / (g (N - K + 1)).
inline double c_infinity_scaled_identity(double g, int n, int k_users) { return 1.0 / (g * (n - k_users + 1)); }

inline std::optional<double> barrier(const AntennaLayout& layout, const MovingRegion& region) {
  const int n = layout.size();
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ax = region.sx * region.sx / 4 - layout.x(i) * layout.x(i);
    const double ay = region.sy * region.sy / 4 - layout.y(i) * layout.y(i);
    if (!(ax > 0) || !(ay > 0)) return std::nullopt;
    v += std::log(ax) + std::log(ay);
    for (int m = i + 1; m < n; ++m) {
      const double d = std::pow(layout.x(i) - layout.x(m), 2) + std::pow(layout.y(i) - layout.y(m), 2) -
                       region.min_spacing * region.min_spacing;
      if (!(d > 0)) return std::nullopt;
      v += std::log(d);
    }
  }
  return v;
}

}  // namespace maopt::oracle
