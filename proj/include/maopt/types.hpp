#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maopt/errors.hpp"

namespace maopt {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cdouble kJ{0.0, 1.0};
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Axis { x, y };

/// 2D transmit wavevector in rad/m.
struct Wavevector {
  double kx = 0.0;
  double ky = 0.0;

  double component(Axis a) const { return a == Axis::x ? kx : ky; }
  double norm() const { return std::hypot(kx, ky); }

  /// Plane-wave direction with elevation theta and azimuth phi.
  static Wavevector from_angles(double wavelength, double elevation, double azimuth) {
    const double k = kTwoPi / wavelength;
    return {k * std::cos(elevation) * std::cos(azimuth), k * std::cos(elevation) * std::sin(azimuth)};
  }
};

/// Half-open index range [start, end) into the global path list.
struct PathRange {
  int start = 0;
  int end = 0;
  int size() const { return end - start; }
  bool contains(int l) const { return l >= start && l < end; }
};

/// Large-timescale channel description: L transmit wavevectors and the
/// L x K angular power matrix. User k owns the contiguous block of paths
/// user_path_ranges[k]; power entries outside a user's block are zero.
struct StatisticalCsi {
  double wavelength = 1.0;
  std::vector<Wavevector> wavevectors;
  RMatrix power;
  std::vector<PathRange> user_path_ranges;
  std::vector<std::optional<int>> los_index;

  int num_paths() const { return static_cast<int>(wavevectors.size()); }
  int num_users() const { return static_cast<int>(user_path_ranges.size()); }

  double user_power(int k) const { return power.col(k).sum(); }

  RVector kappa(Axis a) const {
    RVector out(num_paths());
    for (int l = 0; l < num_paths(); ++l) out(l) = wavevectors[l].component(a);
    return out;
  }

  void validate() const {
    const std::string where = "StatisticalCsi::validate";
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) fail(ErrorKind::invalid_input, where, "wavelength must be positive");
    const int L = num_paths();
    const int K = num_users();
    if (L < 1 || K < 1) fail(ErrorKind::invalid_input, where, "need at least one path and one user");
    if (power.rows() != L || power.cols() != K)
      fail(ErrorKind::invalid_input, where, "power matrix must be L x K");
    if (!los_index.empty() && static_cast<int>(los_index.size()) != K)
      fail(ErrorKind::invalid_input, where, "los_index must have one entry per user");
    const double kmax = kTwoPi / wavelength;
    for (const auto& w : wavevectors) {
      if (!std::isfinite(w.kx) || !std::isfinite(w.ky) || w.norm() > kmax * (1.0 + 1e-9))
        fail(ErrorKind::invalid_input, where, "wavevector longer than 2*pi/lambda");
    }
    int next = 0;
    for (int k = 0; k < K; ++k) {
      const auto& r = user_path_ranges[k];
      if (r.start != next || r.end <= r.start)
        fail(ErrorKind::invalid_input, where, "user path ranges must tile [0, L) in user order");
      next = r.end;
      bool positive = false;
      for (int l = 0; l < L; ++l) {
        const double b = power(l, k);
        if (!(b >= 0.0) || !std::isfinite(b)) fail(ErrorKind::invalid_input, where, "power entries must be finite and >= 0");
        if (b > 0.0 && !r.contains(l)) fail(ErrorKind::invalid_input, where, "power outside a user's path range");
        positive = positive || b > 0.0;
      }
      if (!positive) fail(ErrorKind::invalid_input, where, "every user needs a strictly positive path power");
      if (!los_index.empty() && los_index[k] && !r.contains(*los_index[k]))
        fail(ErrorKind::invalid_input, where, "los_index outside the user's path range");
    }
    if (next != L) fail(ErrorKind::invalid_input, where, "user path ranges must cover all paths");
  }
};

/// Antenna coordinates in meters.
struct AntennaLayout {
  RVector x;
  RVector y;

  AntennaLayout() = default;
  AntennaLayout(RVector xs, RVector ys) : x(std::move(xs)), y(std::move(ys)) {
    if (x.size() != y.size() || x.size() < 1)
      fail(ErrorKind::invalid_input, "AntennaLayout", "x and y must have equal length N >= 1");
  }

  int size() const { return static_cast<int>(x.size()); }
  const RVector& coord(Axis a) const { return a == Axis::x ? x : y; }
  RVector& coord(Axis a) { return a == Axis::x ? x : y; }

  AntennaLayout translated(double dx, double dy) const {
    return {(x.array() + dx).matrix(), (y.array() + dy).matrix()};
  }
};

/// Rectangular moving region centered at the origin with a minimum
/// inter-antenna spacing.
struct MovingRegion {
  double sx = 1.0;
  double sy = 1.0;
  double min_spacing = 0.5;

  void validate() const {
    if (!(sx > 0.0) || !(sy > 0.0) || !(min_spacing > 0.0))
      fail(ErrorKind::invalid_input, "MovingRegion::validate", "sx, sy and min_spacing must be positive");
  }
};

/// One realization of the block-diagonal path-response matrix Psi (L x K)
/// and, once bound to a layout, the channel H = Q^H Psi (N x K).
struct ChannelSample {
  CMatrix psi;
  CMatrix h;
};

}  // namespace maopt
