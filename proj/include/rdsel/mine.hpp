#pragma once

#include <cmath>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/net.hpp"
#include "rdsel/rng.hpp"

namespace rdsel {

// One evaluation of the Donsker-Varadhan lower bound
//   E_n[T(x, z)] - log E_n[exp T(x, z_bar)]
// where z_bar is an in-batch row shuffle of z standing in for marginal
// samples. Keeps both forward passes and the permutation so gradients of
// the bound can be taken w.r.t. the statistic net and both inputs.
struct MineEstimate {
  double value = 0.0;
  ForwardPass joint_pass;
  ForwardPass marginal_pass;
  std::vector<std::size_t> perm;
  std::size_t dx = 0, dz = 0;
};

inline MineEstimate mine_lower_bound(const MlpNetwork& statistic, const Matrix& x, const Matrix& z,
                                     Rng& rng) {
  if (x.rows != z.rows) throw DimensionError("mine_lower_bound: sample counts differ");
  if (x.rows < 2) throw ConfigError("mine_lower_bound: need n >= 2 for a marginal shuffle");
  if (statistic.input_dim() != x.cols + z.cols)
    throw DimensionError("mine_lower_bound: statistic net input dim != dx + dz");
  if (statistic.output_dim() != 1)
    throw DimensionError("mine_lower_bound: statistic net must be scalar-valued");
  const std::size_t n = x.rows;

  MineEstimate est;
  est.dx = x.cols;
  est.dz = z.cols;
  est.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.perm[i] = i;
  rng.shuffle(est.perm);

  Matrix z_bar(n, z.cols);
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = z.row(est.perm[i]);
    double* dst = z_bar.row(i);
    for (std::size_t j = 0; j < z.cols; ++j) dst[j] = src[j];
  }

  est.joint_pass = forward(statistic, hcat(x, z));
  est.marginal_pass = forward(statistic, hcat(x, z_bar));

  double joint_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) joint_mean += est.joint_pass.out()(i, 0);
  joint_mean /= static_cast<double>(n);

  // log-mean-exp with max subtraction
  double m = est.marginal_pass.out()(0, 0);
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, est.marginal_pass.out()(i, 0));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(est.marginal_pass.out()(i, 0) - m);
  const double lme = m + std::log(sum / static_cast<double>(n));

  est.value = joint_mean - lme;
  return est;
}

// Gradients of scale * bound w.r.t. the statistic net parameters and both
// input batches. The z gradient gathers the shuffled term back through
// the stored permutation.
struct MineBackward {
  GradientSet statistic;
  Matrix x_grad;
  Matrix z_grad;
};

inline MineBackward mine_backward(const MlpNetwork& statistic, const MineEstimate& est,
                                  double scale = 1.0) {
  const std::size_t n = est.joint_pass.out().rows;
  MineBackward out;
  out.statistic = GradientSet(statistic);
  out.x_grad = Matrix(n, est.dx);
  out.z_grad = Matrix(n, est.dz);

  // d bound / d T(joint_i) = 1/n
  Matrix joint_out_grad(n, 1, scale / static_cast<double>(n));
  Matrix joint_in_grad = backward(statistic, est.joint_pass, joint_out_grad, out.statistic);

  // d bound / d T(marginal_i) = -softmax(T(marginal))_i
  double m = est.marginal_pass.out()(0, 0);
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, est.marginal_pass.out()(i, 0));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(est.marginal_pass.out()(i, 0) - m);
  Matrix marg_out_grad(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    marg_out_grad(i, 0) = -scale * std::exp(est.marginal_pass.out()(i, 0) - m) / sum;
  Matrix marg_in_grad = backward(statistic, est.marginal_pass, marg_out_grad, out.statistic);

  for (std::size_t i = 0; i < n; ++i) {
    double* xg = out.x_grad.row(i);
    const double* ji = joint_in_grad.row(i);
    const double* mi = marg_in_grad.row(i);
    for (std::size_t j = 0; j < est.dx; ++j) xg[j] = ji[j] + mi[j];
    double* zg = out.z_grad.row(i);
    for (std::size_t j = 0; j < est.dz; ++j) zg[j] += ji[est.dx + j];
    double* zg_perm = out.z_grad.row(est.perm[i]);
    for (std::size_t j = 0; j < est.dz; ++j) zg_perm[j] += mi[est.dx + j];
  }
  return out;
}

}  // namespace rdsel
