#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdsel/dataset.hpp"
#include "rdsel/disentangle.hpp"
#include "rdsel/errors.hpp"
#include "rdsel/policy.hpp"
#include "rdsel/transport.hpp"

namespace rdsel {

enum class DatasetKind { gaussians, moons, csv };
enum class AblationMode { classifier_only, disentangle_only, full };

inline std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::gaussians: return "gaussians";
    case DatasetKind::moons: return "moons";
    case DatasetKind::csv: return "csv";
  }
  return "?";
}

inline std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::classifier_only: return "classifier_only";
    case AblationMode::disentangle_only: return "disentangle_only";
    case AblationMode::full: return "full";
  }
  return "?";
}

inline std::string to_string(DistanceMethod m) {
  return m == DistanceMethod::exact ? "exact" : "sliced";
}

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::gaussians;
  std::string csv_path;                                    // dataset = csv
  std::vector<double> angles = {0, 18, 36, 54, 72, 90, 108};  // first source, last target
  std::size_t n_per_domain = 500;
  double noise_sd = 0.15;

  ModelDims dims;
  std::size_t p_hidden = 16;

  double feature_rate = 0.05;
  double mine_rate = 0.1;
  double policy_rate = 0.05;
  double gamma = 0.9;
  double penalty = -50.0;

  std::size_t batch_size = 64;
  std::size_t reward_batch = 128;
  std::size_t epochs = 200;
  std::size_t rollouts_per_epoch = 0;  // 0 means one rollout per intermediate domain

  DistanceMethod distance = DistanceMethod::sliced;
  std::size_t n_projections = 64;
  bool distance_on_pooled = false;  // distances on pooled embeddings instead of clouds

  AblationMode mode = AblationMode::full;
  bool train_selected_only = false;
  bool mean_baseline = false;

  std::uint64_t seed = 1;

  void validate() const {
    if (feature_rate <= 0.0) throw ConfigError("feature_rate must be > 0");
    if (mine_rate <= 0.0) throw ConfigError("mine_rate must be > 0");
    if (policy_rate <= 0.0) throw ConfigError("policy_rate must be > 0");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must lie in [0, 1)");
    if (penalty >= 0.0) throw ConfigError("penalty must be negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (marginal shuffles need pairs)");
    if (reward_batch < 2) throw ConfigError("reward_batch must be >= 2");
    if (distance == DistanceMethod::exact && !distance_on_pooled &&
        reward_batch > kExactSizeLimit)
      throw ConfigError("reward_batch must be <= " + std::to_string(kExactSizeLimit) +
                        " with the exact distance method");
    if (n_projections < 1) throw ConfigError("n_projections must be >= 1");
    if (dataset != DatasetKind::csv) {
      if (angles.size() < 3) throw ConfigError("angles must list source, >=1 intermediate, target");
      if (noise_sd <= 0.0) throw ConfigError("noise_sd must be > 0");
      if (n_per_domain < batch_size)
        throw ConfigError("n_per_domain must be >= batch_size");
    } else if (csv_path.empty()) {
      throw ConfigError("dataset = csv requires csv_path");
    }
  }
};

inline std::vector<DomainDataset> make_datasets(const ExperimentConfig& cfg) {
  switch (cfg.dataset) {
    case DatasetKind::gaussians:
      return generate_rotated_gaussians(cfg.n_per_domain, cfg.angles, cfg.noise_sd, cfg.seed);
    case DatasetKind::moons:
      return generate_rotated_moons(cfg.n_per_domain, cfg.angles, cfg.noise_sd, cfg.seed);
    case DatasetKind::csv:
      return load_domains_csv(cfg.csv_path, /*allow_eval_labels=*/true);
  }
  throw ConfigError("unknown dataset kind");
}

struct RolloutRecord {
  std::vector<int> order;      // visited intermediate ids, shuffled episode order
  std::vector<int> actions;
  std::vector<double> probs;
  std::vector<double> rewards;
  std::vector<double> returns;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double l_mi = 0.0;
  double l_ms = 0.0;
  double l_ce = 0.0;
  double mean_cumulative_reward = 0.0;
  std::vector<int> selection;  // per intermediate (meta order): 1-based selection
                               // rank in the epoch's final rollout, 0 = unselected
  std::vector<int> path;       // final rollout's selections, in selection order
  std::optional<double> target_accuracy;
  std::vector<RolloutRecord> rollouts;
};

struct TrainingHistory {
  std::vector<int> intermediate_ids;      // meta order
  std::vector<double> intermediate_meta;  // empty when domains carry no meta
  std::vector<EpochRecord> epochs;
};

struct TrainedModel {
  DisentangleModel model;
  MlpNetwork policy;
  TransferPath path;
};

struct TrainResult {
  TrainedModel trained;
  TrainingHistory history;
};

// argmax of C(I(F(x))) per row, ties toward the lower class index
inline std::vector<int> predict_target(const TrainedModel& trained, const Matrix& features) {
  const ForwardPass pf = forward(trained.model.feature, features);
  const ForwardPass pi = forward(trained.model.invariant, pf.out());
  const ForwardPass pc = forward(trained.model.classifier, pi.out());
  std::vector<int> preds(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const double* row = pc.out().row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < pc.out().cols; ++j)
      if (row[j] > row[best]) best = j;
    preds[i] = static_cast<int>(best);
  }
  return preds;
}

inline double evaluate_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.empty()) throw ConfigError("evaluate_accuracy: empty prediction list");
  if (preds.size() != labels.size())
    throw DimensionError("evaluate_accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace detail {

inline Matrix specific_features(const DisentangleModel& model, const Matrix& x) {
  return forward(model.specific, forward(model.feature, x).out()).out();
}

// Equal-size domains are sampled with one shared index set so that
// aligned rows stay aligned across domains; otherwise independent draws.
struct TripleBatch {
  Matrix source_x;
  std::vector<int> source_labels;
  Matrix intermediate_x;
  Matrix target_x;
};

inline TripleBatch triple_batch(const DomainDataset& source, const DomainDataset& intermediate,
                                const DomainDataset& target, std::size_t size, Rng& rng) {
  TripleBatch t;
  if (source.size() == intermediate.size() && source.size() == target.size()) {
    const auto idx = rng.sample_indices(source.size(), size);
    t.source_x = take_rows(source.features, idx);
    t.intermediate_x = take_rows(intermediate.features, idx);
    t.target_x = take_rows(target.features, idx);
    if (!source.labels.empty()) {
      t.source_labels.reserve(size);
      for (std::size_t i : idx) t.source_labels.push_back(source.labels[i]);
    }
  } else {
    Batch s = minibatch(source, std::min(size, source.size()), rng);
    t.source_x = std::move(s.x);
    t.source_labels = std::move(s.labels);
    t.intermediate_x = minibatch(intermediate, std::min(size, intermediate.size()), rng).x;
    t.target_x = minibatch(target, std::min(size, target.size()), rng).x;
  }
  return t;
}

inline double cloud_distance(const Matrix& a, const Matrix& b, const ExperimentConfig& cfg,
                             Rng& proj_rng) {
  if (cfg.distance_on_pooled) {
    const auto ma = col_mean(a);
    const auto mb = col_mean(b);
    double s = 0.0;
    for (std::size_t k = 0; k < ma.size(); ++k) s += (ma[k] - mb[k]) * (ma[k] - mb[k]);
    return std::sqrt(s);
  }
  if (cfg.distance == DistanceMethod::exact)
    return wasserstein_exact({a}, {b}).value;
  return wasserstein_sliced({a}, {b}, cfg.n_projections, proj_rng).value;
}

inline std::size_t n_classes_of(const DomainDataset& source) {
  int max_label = 0;
  for (int l : source.labels) max_label = std::max(max_label, l);
  return static_cast<std::size_t>(max_label) + 1 >= 2 ? static_cast<std::size_t>(max_label) + 1
                                                      : 2;
}

// CE-only update used by the classifier_only ablation.
inline double classifier_step(DisentangleModel& model, const Matrix& xs,
                              const std::vector<int>& labels, double rate) {
  const FeatureBundle bs = extract(model, xs, -1);
  const CeLossResult ce = classification_loss(model, bs, labels);
  apply_update(model.feature, ce.feature_grads, rate, Direction::descent);
  apply_update(model.invariant, ce.invariant_grads, rate, Direction::descent);
  apply_update(model.classifier, ce.classifier_grads, rate, Direction::descent);
  return ce.value;
}

}  // namespace detail

// Deterministic evaluation rollout: intermediates in meta order, action
// a = [p >= 0.5], embeddings from the full datasets. The result is the
// reported transfer path.
inline TransferPath extract_path(const TrainedModel& trained,
                                 const std::vector<DomainDataset>& domains) {
  const DomainSplit split = split_domains(domains);
  const Matrix target_ds = detail::specific_features(trained.model, split.target->features);
  const std::vector<double> phi_target = col_mean(target_ds);
  std::vector<double> phi_prev =
      col_mean(detail::specific_features(trained.model, split.source->features));
  TransferPath path;
  for (const DomainDataset* dom : split.intermediates) {
    const std::vector<double> phi_cur =
        col_mean(detail::specific_features(trained.model, dom->features));
    const PolicyState state = build_state(phi_prev, phi_cur, phi_target);
    const double p = forward(trained.policy, state.as_row()).out()(0, 0);
    if (p >= 0.5) {
      path.ids.push_back(dom->domain_id);
      phi_prev = phi_cur;
    }
  }
  return path;
}

// Algorithm: per epoch, K_roll shuffled episodes over the intermediate
// pool. Every visited domain gets a disentanglement update; in full mode
// each visit also produces a policy state, a sampled action and a
// one-step reward, and the policy takes one REINFORCE step per epoch on
// the mean of the rollout returns.
inline TrainResult train_joint(const ExperimentConfig& cfg,
                               const std::vector<DomainDataset>& domains) {
  cfg.validate();
  const DomainSplit split = split_domains(domains);
  const std::size_t n_classes = detail::n_classes_of(*split.source);
  const std::size_t K = split.intermediates.size();
  const std::size_t k_roll = cfg.rollouts_per_epoch == 0 ? K : cfg.rollouts_per_epoch;

  Rng master(cfg.seed);
  Rng init_rng = master.fork(1);
  Rng batch_rng = master.fork(2);
  Rng mine_rng = master.fork(3);
  Rng action_rng = master.fork(4);
  Rng episode_rng = master.fork(5);
  Rng proj_rng = master.fork(6);

  TrainedModel trained;
  trained.model = make_disentangle_model(split.source->dim(), n_classes, cfg.dims, init_rng);
  trained.policy =
      xavier_init({3 * cfg.dims.ds_dim, cfg.p_hidden, 1}, init_rng, Activation::sigmoid);

  TrainingHistory history;
  const bool all_meta =
      std::all_of(split.intermediates.begin(), split.intermediates.end(),
                  [](const DomainDataset* d) { return d->meta.has_value(); });
  std::map<int, std::size_t> id_to_slot;
  for (std::size_t j = 0; j < K; ++j) {
    history.intermediate_ids.push_back(split.intermediates[j]->domain_id);
    if (all_meta) history.intermediate_meta.push_back(*split.intermediates[j]->meta);
    id_to_slot[split.intermediates[j]->domain_id] = j;
  }

  const DisentangleRates rates{cfg.feature_rate, cfg.mine_rate};
  const RewardConfig reward_cfg{cfg.gamma, cfg.penalty};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum_mi = 0.0, sum_ms = 0.0, sum_ce = 0.0;
    std::size_t n_steps = 0;
    std::vector<RolloutTrace> traces;
    std::vector<RolloutRecord> records;

    for (std::size_t roll = 0; roll < k_roll; ++roll) {
      std::vector<std::size_t> order(K);
      for (std::size_t j = 0; j < K; ++j) order[j] = j;
      episode_rng.shuffle(order);

      const DomainDataset* prev = split.source;
      RolloutTrace trace;
      RolloutRecord record;

      for (std::size_t slot : order) {
        const DomainDataset* dom = split.intermediates[slot];

        ActionSample act;
        bool act_sampled = false;
        if (cfg.mode == AblationMode::full && cfg.train_selected_only) {
          // sample from the pre-update snapshot, then train only on
          // selected domains
          const detail::TripleBatch rb = detail::triple_batch(*prev, *dom, *split.target,
                                                              cfg.reward_batch, batch_rng);
          const Matrix cur_c = detail::specific_features(trained.model, rb.intermediate_x);
          const Matrix prev_c = detail::specific_features(trained.model, rb.source_x);
          const Matrix tgt_c = detail::specific_features(trained.model, rb.target_x);
          const PolicyState state =
              build_state(col_mean(prev_c), col_mean(cur_c), col_mean(tgt_c));
          act = sample_action(trained.policy, state, action_rng);
          act_sampled = true;
          const double d_it_prev = detail::cloud_distance(prev_c, tgt_c, cfg, proj_rng);
          const double d_ii_next = detail::cloud_distance(cur_c, prev_c, cfg, proj_rng);
          const double d_it_next = detail::cloud_distance(cur_c, tgt_c, cfg, proj_rng);
          RolloutStep step;
          step.domain_id = dom->domain_id;
          step.state = state;
          step.action = act.a;
          step.p = act.p;
          step.d_it_prev = d_it_prev;
          step.d_ii_next = d_ii_next;
          step.d_it_next = d_it_next;
          step.reward = step_reward(d_it_prev, d_ii_next, d_it_next, act.a, reward_cfg);
          trace.steps.push_back(step);
          if (act.a == 0) {
            record.order.push_back(dom->domain_id);
            record.actions.push_back(0);
            record.probs.push_back(act.p);
            record.rewards.push_back(step.reward);
            continue;  // skip the disentangle update for unselected domains
          }
        }

        const detail::TripleBatch tb =
            detail::triple_batch(*split.source, *dom, *split.target, cfg.batch_size, batch_rng);
        if (cfg.mode == AblationMode::classifier_only) {
          sum_ce += detail::classifier_step(trained.model, tb.source_x, tb.source_labels,
                                            cfg.feature_rate);
        } else {
          const DisentangleReport rep =
              disentangle_step(trained.model, tb.source_x, tb.source_labels, tb.intermediate_x,
                               tb.target_x, rates, mine_rng);
          sum_mi += rep.l_mi;
          sum_ms += rep.l_ms;
          sum_ce += rep.l_ce;
        }
        ++n_steps;

        if (cfg.mode == AblationMode::full && !cfg.train_selected_only) {
          // policy step on the post-update feature snapshot
          const detail::TripleBatch rb = detail::triple_batch(*prev, *dom, *split.target,
                                                              cfg.reward_batch, batch_rng);
          const Matrix prev_c = detail::specific_features(trained.model, rb.source_x);
          const Matrix cur_c = detail::specific_features(trained.model, rb.intermediate_x);
          const Matrix tgt_c = detail::specific_features(trained.model, rb.target_x);
          const PolicyState state =
              build_state(col_mean(prev_c), col_mean(cur_c), col_mean(tgt_c));
          act = sample_action(trained.policy, state, action_rng);
          act_sampled = true;
          RolloutStep step;
          step.domain_id = dom->domain_id;
          step.state = state;
          step.action = act.a;
          step.p = act.p;
          step.d_it_prev = detail::cloud_distance(prev_c, tgt_c, cfg, proj_rng);
          step.d_ii_next = detail::cloud_distance(cur_c, prev_c, cfg, proj_rng);
          step.d_it_next = detail::cloud_distance(cur_c, tgt_c, cfg, proj_rng);
          step.reward =
              step_reward(step.d_it_prev, step.d_ii_next, step.d_it_next, act.a, reward_cfg);
          trace.steps.push_back(step);
        }

        if (act_sampled) {
          record.order.push_back(dom->domain_id);
          record.actions.push_back(act.a);
          record.probs.push_back(act.p);
          record.rewards.push_back(trace.steps.back().reward);
          if (act.a == 1) prev = dom;
        }
      }

      if (cfg.mode == AblationMode::full) {
        trace.finalize_returns(cfg.gamma);
        record.returns = trace.returns;
        traces.push_back(std::move(trace));
        records.push_back(std::move(record));
      } else if (cfg.mode == AblationMode::disentangle_only) {
        for (std::size_t slot : order) record.order.push_back(split.intermediates[slot]->domain_id);
        records.push_back(std::move(record));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    if (n_steps > 0) {
      rec.l_mi = sum_mi / static_cast<double>(n_steps);
      rec.l_ms = sum_ms / static_cast<double>(n_steps);
      rec.l_ce = sum_ce / static_cast<double>(n_steps);
    }

    if (cfg.mode == AblationMode::full) {
      const ReinforceDiagnostics diag =
          reinforce_update(trained.policy, traces, cfg.policy_rate, cfg.mean_baseline);
      rec.mean_cumulative_reward = diag.mean_return;
    }

    rec.selection.assign(K, 0);
    if (!records.empty()) {
      const RolloutRecord& last = records.back();
      int rank = 0;
      for (std::size_t i = 0; i < last.order.size(); ++i) {
        const bool selected =
            cfg.mode == AblationMode::disentangle_only || (i < last.actions.size() && last.actions[i] == 1);
        if (selected) {
          rec.selection[id_to_slot.at(last.order[i])] = ++rank;
          rec.path.push_back(last.order[i]);
        }
      }
    }
    if (!split.target->eval_labels.empty()) {
      rec.target_accuracy =
          evaluate_accuracy(predict_target(trained, split.target->features), split.target->eval_labels);
    }
    rec.rollouts = std::move(records);

    const double worst = std::max({std::fabs(rec.l_mi), std::fabs(rec.l_ms), std::fabs(rec.l_ce)});
    if (!std::isfinite(worst) || worst > 1e6)
      throw NumericalError("train_joint: losses diverged at epoch " + std::to_string(epoch));

    history.epochs.push_back(std::move(rec));
  }

  switch (cfg.mode) {
    case AblationMode::full:
      trained.path = extract_path(trained, domains);
      break;
    case AblationMode::disentangle_only:
      trained.path.ids = history.intermediate_ids;
      break;
    case AblationMode::classifier_only:
      break;
  }
  return {std::move(trained), std::move(history)};
}

inline TrainResult train_joint(const ExperimentConfig& cfg) {
  return train_joint(cfg, make_datasets(cfg));
}

struct AblationRow {
  AblationMode mode;
  double accuracy = 0.0;
  TransferPath path;
};

// Table-style ablation: the three modes share the seed and therefore the
// exact same datasets.
inline std::vector<AblationRow> run_ablation_suite(const ExperimentConfig& cfg) {
  std::vector<AblationRow> rows;
  for (AblationMode mode :
       {AblationMode::classifier_only, AblationMode::disentangle_only, AblationMode::full}) {
    ExperimentConfig c = cfg;
    c.mode = mode;
    const std::vector<DomainDataset> domains = make_datasets(c);
    const DomainSplit split = split_domains(domains);
    if (split.target->eval_labels.empty())
      throw DataError("run_ablation_suite: target has no held-out labels to score against");
    const TrainResult result = train_joint(c, domains);
    AblationRow row;
    row.mode = mode;
    row.accuracy = evaluate_accuracy(predict_target(result.trained, split.target->features),
                                     split.target->eval_labels);
    row.path = result.trained.path;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rdsel
