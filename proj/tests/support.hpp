#pragma once

#include <complex>
#include <vector>

#include "maopt/maopt.hpp"
#include "maopt/oracles.hpp"
#include "maopt/validation.hpp"

namespace test_support {

using namespace maopt;

inline constexpr double kLambda = 0.0598;

inline StatisticalCsi random_csi(Rng& rng, const std::vector<int>& paths) {
  return validation::gen::random_csi(rng, paths, kLambda);
}

inline AntennaLayout random_layout(Rng& rng, int n, double side_wavelengths = 4.0) {
  return validation::gen::random_layout(rng, n, {side_wavelengths * kLambda, side_wavelengths * kLambda, kLambda / 2});
}

inline oracle::Mat to_oracle(const CMatrix& m) {
  oracle::Mat out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out(i, j) = m(i, j);
  return out;
}

inline CMatrix random_complex(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = {n(rng), n(rng)};
  return m;
}

}  // namespace test_support
