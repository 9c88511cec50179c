#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/net.hpp"
#include "rdsel/rng.hpp"

namespace rdsel {

// Selection-probability clamp before logs are taken.
constexpr double kProbClamp = 1e-6;

// Policy input: previously selected intermediate embedding (the source
// embedding before anything is selected), the current intermediate, and
// the target, concatenated in that order.
struct PolicyState {
  std::vector<double> concat;

  Matrix as_row() const {
    Matrix m(1, concat.size());
    for (std::size_t i = 0; i < concat.size(); ++i) m(0, i) = concat[i];
    return m;
  }
};

inline PolicyState build_state(const std::vector<double>& prev_phi,
                               const std::vector<double>& cur_phi,
                               const std::vector<double>& target_phi) {
  if (prev_phi.size() != cur_phi.size() || cur_phi.size() != target_phi.size())
    throw DimensionError("build_state: embedding lengths differ");
  PolicyState s;
  s.concat.reserve(3 * prev_phi.size());
  s.concat.insert(s.concat.end(), prev_phi.begin(), prev_phi.end());
  s.concat.insert(s.concat.end(), cur_phi.begin(), cur_phi.end());
  s.concat.insert(s.concat.end(), target_phi.begin(), target_phi.end());
  return s;
}

struct ActionSample {
  int a = 0;          // 0 or 1
  double p = 0.5;     // clamped selection probability
  double log_prob = 0.0;
};

inline double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

inline ActionSample sample_action(const MlpNetwork& policy, const PolicyState& state, Rng& rng) {
  if (policy.output != Activation::sigmoid || policy.output_dim() != 1)
    throw ConfigError("sample_action: policy must have a scalar sigmoid head");
  ActionSample s;
  s.p = clamp_prob(forward(policy, state.as_row()).out()(0, 0));
  s.a = rng.bernoulli(s.p) ? 1 : 0;
  s.log_prob = (s.a == 1) ? std::log(s.p) : std::log(1.0 - s.p);
  return s;
}

struct RewardConfig {
  double gamma = 0.9;
  double penalty = -50.0;  // finite stand-in for the -inf branch
};

// One-step reward. d_it_prev is the pre-action distance from the previous
// selection to the target; d_ii_next and d_it_next are the post-action
// distances from the newly selected domain to the previous selection and
// to the target.
inline double step_reward(double d_it_prev, double d_ii_next, double d_it_next, int action,
                          const RewardConfig& cfg) {
  if (d_it_prev < 0.0 || d_ii_next < 0.0 || d_it_next < 0.0)
    throw DataError("step_reward: distances must be nonnegative");
  if (cfg.penalty >= 0.0) throw ConfigError("step_reward: penalty must be negative");
  if (action == 0) return 0.0;
  if (d_ii_next < d_it_prev && d_it_next < d_it_prev)
    return 2.0 * d_it_prev - d_ii_next - d_it_next;
  return cfg.penalty;
}

// Discounted returns G_T = sum_{k>=T} gamma^{k-T} R_k over the episode.
inline std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (!std::isfinite(rewards[t])) throw NumericalError("compute_returns: non-finite reward");
    acc = rewards[t] + gamma * acc;
    returns[t] = acc;
  }
  return returns;
}

// One rollout: per-step bookkeeping feeding the policy update.
struct RolloutStep {
  int domain_id = 0;
  PolicyState state;
  int action = 0;
  double p = 0.5;
  double reward = 0.0;
  double d_it_prev = 0.0;
  double d_ii_next = 0.0;
  double d_it_next = 0.0;
};

struct RolloutTrace {
  std::vector<RolloutStep> steps;
  std::vector<double> returns;

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(steps.size());
    for (const RolloutStep& s : steps) r.push_back(s.reward);
    return r;
  }

  void finalize_returns(double gamma) { returns = compute_returns(rewards(), gamma); }
};

struct ReinforceDiagnostics {
  double mean_return = 0.0;     // mean over rollouts of G_0
  double grad_max_abs = 0.0;
};

// REINFORCE ascent step: g = (1/K) sum_rollouts sum_T grad log pi(a_T|s_T) * G_T,
// then theta <- theta + rate * g. When `mean_baseline` is set, the
// per-step mean of G_T across rollouts is subtracted (variance reduction;
// off by default). Probabilities are recomputed by a forward pass; the
// policy must not have been updated since the traces were sampled.
inline ReinforceDiagnostics reinforce_update(MlpNetwork& policy,
                                             const std::vector<RolloutTrace>& traces, double rate,
                                             bool mean_baseline = false) {
  if (traces.empty()) throw ConfigError("reinforce_update: no rollouts");
  for (const RolloutTrace& t : traces)
    if (t.returns.size() != t.steps.size())
      throw ConfigError("reinforce_update: returns not computed for a trace");

  std::vector<double> baseline;
  if (mean_baseline) {
    std::size_t max_len = 0;
    for (const RolloutTrace& t : traces) max_len = std::max(max_len, t.steps.size());
    baseline.assign(max_len, 0.0);
    std::vector<std::size_t> counts(max_len, 0);
    for (const RolloutTrace& t : traces)
      for (std::size_t i = 0; i < t.returns.size(); ++i) {
        baseline[i] += t.returns[i];
        ++counts[i];
      }
    for (std::size_t i = 0; i < max_len; ++i) baseline[i] /= static_cast<double>(counts[i]);
  }

  GradientSet grad(policy);
  ReinforceDiagnostics diag;
  for (const RolloutTrace& trace : traces) {
    if (!trace.returns.empty()) diag.mean_return += trace.returns.front();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const RolloutStep& step = trace.steps[i];
      const ForwardPass pass = forward(policy, step.state.as_row());
      const double p = clamp_prob(pass.out()(0, 0));
      const double advantage = trace.returns[i] - (mean_baseline ? baseline[i] : 0.0);
      // d log pi / d p, zero where the clamp is active
      double dlogp_dp = 0.0;
      const double raw = pass.out()(0, 0);
      if (raw > kProbClamp && raw < 1.0 - kProbClamp)
        dlogp_dp = (step.action == 1) ? 1.0 / p : -1.0 / (1.0 - p);
      Matrix out_grad(1, 1, dlogp_dp * advantage);
      backward(policy, pass, out_grad, grad);
    }
  }
  grad.scale(1.0 / static_cast<double>(traces.size()));
  diag.mean_return /= static_cast<double>(traces.size());
  for (const Matrix& w : grad.weights) diag.grad_max_abs = std::max(diag.grad_max_abs, max_abs(w));
  for (const Matrix& b : grad.biases) diag.grad_max_abs = std::max(diag.grad_max_abs, max_abs(b));
  apply_update(policy, grad, rate, Direction::ascent);
  return diag;
}

}  // namespace rdsel
