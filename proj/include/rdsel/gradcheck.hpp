#pragma once

#include <cmath>
#include <functional>

#include "rdsel/net.hpp"

namespace rdsel {

// Central-difference verification of an analytic gradient. `loss_fn` must
// be a deterministic function of the network parameters. Returns the
// maximum over parameters of |analytic - numeric| / max(1, |numeric|).
inline double finite_diff_check(const std::function<double(const MlpNetwork&)>& loss_fn,
                                MlpNetwork net, const GradientSet& analytic, double h) {
  if (h <= 0.0) throw ConfigError("finite_diff_check: h must be positive");
  double worst = 0.0;
  auto probe = [&](double& param, double analytic_grad) {
    const double saved = param;
    param = saved + h;
    const double up = loss_fn(net);
    param = saved - h;
    const double down = loss_fn(net);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::fabs(analytic_grad - numeric) / std::max(1.0, std::fabs(numeric));
    worst = std::max(worst, err);
  };
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].data.size(); ++i)
      probe(net.weights[l].data[i], analytic.weights[l].data[i]);
    for (std::size_t i = 0; i < net.biases[l].data.size(); ++i)
      probe(net.biases[l].data[i], analytic.biases[l].data[i]);
  }
  return worst;
}

}  // namespace rdsel
