#pragma once

// Shared oracle helpers for the test suites. Everything here is
// deliberately independent of the library's training loops.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rdsel/mine.hpp"
#include "rdsel/net.hpp"
#include "rdsel/rng.hpp"

namespace rdsel::testutil {

// Correlated bivariate standard normal samples with correlation rho;
// closed-form MI is -0.5 ln(1 - rho^2).
inline void sample_bivariate_gaussian(std::size_t n, double rho, Rng& rng, Matrix& x, Matrix& z) {
  x = Matrix(n, 1);
  z = Matrix(n, 1);
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal();
    const double v = rng.normal();
    x(i, 0) = u;
    z(i, 0) = rho * u + c * v;
  }
}

// Full-batch ascent on the Donsker-Varadhan bound; returns the final
// estimate averaged over `eval_shuffles` fresh marginal shuffles.
inline double train_mine(MlpNetwork& statistic, const Matrix& x, const Matrix& z,
                         std::size_t steps, double rate, Rng& rng,
                         std::size_t eval_shuffles = 32) {
  for (std::size_t s = 0; s < steps; ++s) {
    const MineEstimate est = mine_lower_bound(statistic, x, z, rng);
    const MineBackward back = mine_backward(statistic, est);
    apply_update(statistic, back.statistic, rate, Direction::ascent);
  }
  double acc = 0.0;
  for (std::size_t s = 0; s < eval_shuffles; ++s)
    acc += mine_lower_bound(statistic, x, z, rng).value;
  return acc / static_cast<double>(eval_shuffles);
}

}  // namespace rdsel::testutil
