#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/mine.hpp"
#include "rdsel/net.hpp"
#include "rdsel/rng.hpp"
#include "rdsel/transport.hpp"

namespace rdsel {

// Domain pairs the pairwise MI terms run over, in fixed order.
enum DomainPair { kSourceIntermediate = 0, kSourceTarget = 1, kIntermediateTarget = 2 };

// Feature extractor F, invariant head I, specific head S, classifier C,
// and one statistic net per (feature kind, domain pair). Invariant-pair
// and specific-pair estimators are kept separate: the two feature kinds
// are driven in opposite directions, and a shared statistic net would
// have to bound both joints at once.
struct DisentangleModel {
  MlpNetwork feature;     // F
  MlpNetwork invariant;   // I, consumes F's output
  MlpNetwork specific;    // S, consumes F's output
  MlpNetwork classifier;  // C, softmax head on I's output
  std::array<MlpNetwork, 3> mine_invariant;  // T on f_di pairs
  std::array<MlpNetwork, 3> mine_specific;   // T on f_ds pairs

  std::size_t n_classes() const { return classifier.output_dim(); }
};

struct ModelDims {
  std::size_t f_hidden = 16;
  std::size_t f_out = 8;
  std::size_t i_hidden = 8;
  std::size_t di_dim = 4;
  std::size_t s_hidden = 8;
  std::size_t ds_dim = 4;
  std::size_t t_hidden = 16;
};

inline DisentangleModel make_disentangle_model(std::size_t input_dim, std::size_t n_classes,
                                               const ModelDims& dims, Rng& rng) {
  DisentangleModel m;
  m.feature = xavier_init({input_dim, dims.f_hidden, dims.f_out}, rng);
  m.invariant = xavier_init({dims.f_out, dims.i_hidden, dims.di_dim}, rng);
  m.specific = xavier_init({dims.f_out, dims.s_hidden, dims.ds_dim}, rng);
  m.classifier = xavier_init({dims.di_dim, n_classes}, rng, Activation::softmax);
  for (auto& t : m.mine_invariant)
    t = xavier_init({2 * dims.di_dim, dims.t_hidden, 1}, rng);
  for (auto& t : m.mine_specific)
    t = xavier_init({2 * dims.ds_dim, dims.t_hidden, 1}, rng);
  return m;
}

// Per-batch features of one domain: f_di = I(F(x)), f_ds = S(F(x)), and
// the pooled embedding phi (column mean of f_ds). The forward passes are
// kept so losses can backpropagate through the extraction.
struct FeatureBundle {
  Matrix f_di;
  Matrix f_ds;
  std::vector<double> phi;
  int domain_id = 0;
  ForwardPass pass_f, pass_i, pass_s;
};

inline FeatureBundle extract(const DisentangleModel& model, const Matrix& batch, int domain_id) {
  FeatureBundle b;
  b.domain_id = domain_id;
  b.pass_f = forward(model.feature, batch);
  b.pass_i = forward(model.invariant, b.pass_f.out());
  b.pass_s = forward(model.specific, b.pass_f.out());
  b.f_di = b.pass_i.out();
  b.f_ds = b.pass_s.out();
  b.phi = col_mean(b.f_ds);
  return b;
}

namespace detail {

inline void check_bundle_sizes(const FeatureBundle& s, const FeatureBundle& i,
                               const FeatureBundle& t) {
  if (s.f_di.rows != i.f_di.rows || s.f_di.rows != t.f_di.rows)
    throw DimensionError("bundles must share the batch size; pairs are formed row-wise");
}

}  // namespace detail

// Result of one MI-sum loss: the loss value, gradients for F and the
// relevant head, and per-pair ascent gradients for the statistic nets
// (gradients of the raw bound, not of the loss).
struct MiLossResult {
  double value = 0.0;
  std::array<double, 3> estimates{};
  GradientSet feature_grads;
  GradientSet head_grads;
  std::array<GradientSet, 3> statistic_grads;
};

namespace detail {

// Shared core of the two MI losses. `sign` is +1 when the loss is the sum
// of bounds (specific) and -1 when it is the negated sum (invariant).
template <bool UseInvariant>
MiLossResult mi_sum_loss(const DisentangleModel& model, const FeatureBundle& s,
                         const FeatureBundle& i, const FeatureBundle& t, double sign, Rng& rng) {
  check_bundle_sizes(s, i, t);
  const auto& nets = UseInvariant ? model.mine_invariant : model.mine_specific;
  auto feat = [](const FeatureBundle& b) -> const Matrix& {
    return UseInvariant ? b.f_di : b.f_ds;
  };
  const std::array<std::pair<const FeatureBundle*, const FeatureBundle*>, 3> pairs = {{
      {&s, &i},
      {&s, &t},
      {&i, &t},
  }};

  MiLossResult res;
  res.feature_grads = GradientSet(model.feature);
  res.head_grads = GradientSet(UseInvariant ? model.invariant : model.specific);

  Matrix dfeat_s(feat(s).rows, feat(s).cols);
  Matrix dfeat_i = dfeat_s, dfeat_t = dfeat_s;
  double bound_sum = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const MineEstimate est = mine_lower_bound(nets[k], feat(*pairs[k].first), feat(*pairs[k].second), rng);
    MineBackward mb = mine_backward(nets[k], est, 1.0);
    bound_sum += est.value;
    res.estimates[k] = est.value;
    res.statistic_grads[k] = std::move(mb.statistic);
    Matrix* dx = (k == kIntermediateTarget) ? &dfeat_i : &dfeat_s;
    Matrix* dz = (k == kSourceIntermediate) ? &dfeat_i : &dfeat_t;
    axpy(*dx, sign, mb.x_grad);
    axpy(*dz, sign, mb.z_grad);
  }
  res.value = sign * bound_sum;

  const auto& head = UseInvariant ? model.invariant : model.specific;
  auto backprop = [&](const FeatureBundle& b, const Matrix& dfeat) {
    const ForwardPass& head_pass = UseInvariant ? b.pass_i : b.pass_s;
    Matrix dF_out = backward(head, head_pass, dfeat, res.head_grads);
    backward(model.feature, b.pass_f, dF_out, res.feature_grads);
  };
  backprop(s, dfeat_s);
  backprop(i, dfeat_i);
  backprop(t, dfeat_t);
  return res;
}

}  // namespace detail

// L_mi: negated sum of the pairwise invariant-feature bounds; descending
// it drives the pairwise mutual information up.
inline MiLossResult invariant_loss(const DisentangleModel& model, const FeatureBundle& s,
                                   const FeatureBundle& i, const FeatureBundle& t, Rng& rng) {
  return detail::mi_sum_loss<true>(model, s, i, t, -1.0, rng);
}

// L_ms: sum of the pairwise specific-feature bounds; descending it drives
// the pairwise mutual information down.
inline MiLossResult specific_loss(const DisentangleModel& model, const FeatureBundle& s,
                                  const FeatureBundle& i, const FeatureBundle& t, Rng& rng) {
  return detail::mi_sum_loss<false>(model, s, i, t, +1.0, rng);
}

struct CeLossResult {
  double value = 0.0;
  GradientSet feature_grads;
  GradientSet invariant_grads;
  GradientSet classifier_grads;
};

// Mean cross-entropy of the classifier on source invariant features.
inline CeLossResult classification_loss(const DisentangleModel& model, const FeatureBundle& source,
                                        const std::vector<int>& labels) {
  const std::size_t n = source.f_di.rows;
  if (labels.size() != n)
    throw DimensionError("classification_loss: label count != batch size");
  const std::size_t m = model.n_classes();
  CeLossResult res;
  res.feature_grads = GradientSet(model.feature);
  res.invariant_grads = GradientSet(model.invariant);
  res.classifier_grads = GradientSet(model.classifier);

  const ForwardPass pass_c = forward(model.classifier, source.f_di);
  const Matrix& probs = pass_c.out();
  Matrix dprobs(n, m);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= m)
      throw DataError("classification_loss: label " + std::to_string(y) + " outside [0, " +
                      std::to_string(m) + ")");
    const double p = probs(i, static_cast<std::size_t>(y));
    loss -= std::log(p);
    dprobs(i, static_cast<std::size_t>(y)) = -1.0 / (static_cast<double>(n) * p);
  }
  res.value = loss / static_cast<double>(n);

  Matrix dfdi = backward(model.classifier, pass_c, dprobs, res.classifier_grads);
  Matrix dF_out = backward(model.invariant, source.pass_i, dfdi, res.invariant_grads);
  backward(model.feature, source.pass_f, dF_out, res.feature_grads);
  return res;
}

struct DisentangleRates {
  double feature = 0.05;  // F, I, S, C descent
  double mine = 0.1;      // statistic net ascent
};

struct DisentangleReport {
  double l_mi = 0.0;
  double l_ms = 0.0;
  double l_ce = 0.0;
};

// One Algorithm-style iteration on a (source, intermediate, target) batch
// triple: first descend L_mi + L_ce through F, I, C while the invariant
// statistic nets ascend their bounds, then (on the updated extractor)
// descend L_ms through F, S while the specific statistic nets ascend.
inline DisentangleReport disentangle_step(DisentangleModel& model, const Matrix& source_x,
                                          const std::vector<int>& source_labels,
                                          const Matrix& intermediate_x, const Matrix& target_x,
                                          const DisentangleRates& rates, Rng& rng) {
  DisentangleReport report;
  {
    const FeatureBundle bs = extract(model, source_x, -1);
    const FeatureBundle bi = extract(model, intermediate_x, -1);
    const FeatureBundle bt = extract(model, target_x, -1);
    MiLossResult inv = invariant_loss(model, bs, bi, bt, rng);
    CeLossResult ce = classification_loss(model, bs, source_labels);
    report.l_mi = inv.value;
    report.l_ce = ce.value;
    inv.feature_grads.add(ce.feature_grads);
    inv.head_grads.add(ce.invariant_grads);
    apply_update(model.feature, inv.feature_grads, rates.feature, Direction::descent);
    apply_update(model.invariant, inv.head_grads, rates.feature, Direction::descent);
    apply_update(model.classifier, ce.classifier_grads, rates.feature, Direction::descent);
    for (std::size_t k = 0; k < 3; ++k)
      apply_update(model.mine_invariant[k], inv.statistic_grads[k], rates.mine, Direction::ascent);
  }
  {
    const FeatureBundle bs = extract(model, source_x, -1);
    const FeatureBundle bi = extract(model, intermediate_x, -1);
    const FeatureBundle bt = extract(model, target_x, -1);
    MiLossResult spec = specific_loss(model, bs, bi, bt, rng);
    report.l_ms = spec.value;
    apply_update(model.feature, spec.feature_grads, rates.feature, Direction::descent);
    apply_update(model.specific, spec.head_grads, rates.feature, Direction::descent);
    for (std::size_t k = 0; k < 3; ++k)
      apply_update(model.mine_specific[k], spec.statistic_grads[k], rates.mine, Direction::ascent);
  }
  return report;
}

// Spec pairwise distances between the f_ds clouds of a bundle list.
inline Matrix pairwise_domain_distances(const std::vector<FeatureBundle>& bundles,
                                        DistanceMethod method, std::size_t n_projections,
                                        std::uint64_t seed) {
  std::vector<Matrix> supports;
  supports.reserve(bundles.size());
  for (const FeatureBundle& b : bundles) supports.push_back(b.f_ds);
  return pairwise_distances(supports, method, n_projections, seed);
}

}  // namespace rdsel
