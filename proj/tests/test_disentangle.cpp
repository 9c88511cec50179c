#include <cmath>

#include "catch_amalgamated.hpp"
#include "rdsel/dataset.hpp"
#include "rdsel/disentangle.hpp"
#include "rdsel/gradcheck.hpp"
#include "test_util.hpp"

using namespace rdsel;

namespace {

Matrix random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

DisentangleModel small_model(std::uint64_t seed, std::size_t input_dim = 2,
                             std::size_t n_classes = 2) {
  Rng rng(seed);
  ModelDims dims;
  dims.f_hidden = 6;
  dims.f_out = 4;
  dims.i_hidden = 4;
  dims.di_dim = 3;
  dims.s_hidden = 4;
  dims.ds_dim = 3;
  dims.t_hidden = 5;
  return make_disentangle_model(input_dim, n_classes, dims, rng);
}

}  // namespace

TEST_CASE("mine bound is zero for a constant statistic") {
  // zero weights make T identically equal to its output bias
  MlpNetwork t = xavier_init({4, 5, 1}, 3);
  for (Matrix& w : t.weights)
    for (double& v : w.data) v = 0.0;
  t.biases[1](0, 0) = 1.7;
  Rng rng(5);
  const Matrix x = random_batch(16, 2, 8);
  const Matrix z = random_batch(16, 2, 9);
  REQUIRE(mine_lower_bound(t, x, z, rng).value == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("mine bound contract errors") {
  MlpNetwork t = xavier_init({4, 5, 1}, 3);
  Rng rng(5);
  const Matrix x = random_batch(1, 2, 8);
  const Matrix z = random_batch(1, 2, 9);
  REQUIRE_THROWS_AS(mine_lower_bound(t, x, z, rng), ConfigError);
  const Matrix x4 = random_batch(4, 2, 8);
  const Matrix z3 = random_batch(3, 2, 9);
  REQUIRE_THROWS_AS(mine_lower_bound(t, x4, z3, rng), DimensionError);
  const Matrix zwide = random_batch(4, 3, 9);
  REQUIRE_THROWS_AS(mine_lower_bound(t, x4, zwide, rng), DimensionError);
}

TEST_CASE("mine gradients match finite differences") {
  const MlpNetwork t = xavier_init({4, 6, 1}, 11);
  const Matrix x = random_batch(8, 2, 12);
  const Matrix z = random_batch(8, 2, 13);

  // the loss closes over a fixed rng seed so the marginal shuffle is
  // identical on every evaluation
  auto bound_value = [&](const MlpNetwork& net) {
    Rng rng(55);
    return mine_lower_bound(net, x, z, rng).value;
  };
  Rng rng(55);
  const MineEstimate est = mine_lower_bound(t, x, z, rng);
  const MineBackward back = mine_backward(t, est);
  REQUIRE(finite_diff_check(bound_value, t, back.statistic, 1e-5) < 1e-4);

  // input gradients, same oracle by hand
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    Rng r1(55), r2(55);
    const double numeric = (mine_lower_bound(t, xp, z, r1).value -
                            mine_lower_bound(t, xm, z, r2).value) /
                           (2.0 * h);
    REQUIRE(back.x_grad.data[i] == Catch::Approx(numeric).margin(1e-6));
  }
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    Matrix zp = z, zm = z;
    zp.data[i] += h;
    zm.data[i] -= h;
    Rng r1(55), r2(55);
    const double numeric = (mine_lower_bound(t, x, zp, r1).value -
                            mine_lower_bound(t, x, zm, r2).value) /
                           (2.0 * h);
    REQUIRE(back.z_grad.data[i] == Catch::Approx(numeric).margin(1e-6));
  }
}

TEST_CASE("mine estimate rises on correlated gaussians and stays near zero on independent ones") {
  Rng data_rng(201);
  Matrix x, z;
  testutil::sample_bivariate_gaussian(2000, 0.9, data_rng, x, z);
  MlpNetwork t = xavier_init({2, 16, 1}, 7);
  Rng train_rng(77);
  const double est = testutil::train_mine(t, x, z, 600, 0.08, train_rng);
  const double mi_true = -0.5 * std::log(1.0 - 0.81);
  REQUIRE(est > 0.35);
  REQUIRE(est < mi_true + 0.1);

  Matrix xi, zi;
  testutil::sample_bivariate_gaussian(2000, 0.0, data_rng, xi, zi);
  MlpNetwork t0 = xavier_init({2, 16, 1}, 8);
  const double est0 = testutil::train_mine(t0, xi, zi, 600, 0.08, train_rng);
  REQUIRE(std::fabs(est0) < 0.05);
}

TEST_CASE("extract pools the specific features") {
  const DisentangleModel model = small_model(31);
  const Matrix one = random_batch(1, 2, 32);
  const FeatureBundle b1 = extract(model, one, 4);
  REQUIRE(b1.domain_id == 4);
  for (std::size_t j = 0; j < b1.f_ds.cols; ++j) REQUIRE(b1.phi[j] == b1.f_ds(0, j));

  Matrix dup(2, 2);
  dup.data = {0.4, -0.3, 0.4, -0.3};
  const FeatureBundle b2 = extract(model, dup, 0);
  for (std::size_t j = 0; j < b2.f_di.cols; ++j)
    REQUIRE(b2.f_di(0, j) == b2.f_di(1, j));

  const Matrix two = random_batch(2, 2, 33);
  const FeatureBundle b3 = extract(model, two, 0);
  for (std::size_t j = 0; j < b3.f_ds.cols; ++j)
    REQUIRE(b3.phi[j] == Catch::Approx(0.5 * (b3.f_ds(0, j) + b3.f_ds(1, j))).epsilon(1e-15));

  // deterministic given model and batch
  const FeatureBundle b4 = extract(model, two, 0);
  REQUIRE(b3.f_di.data == b4.f_di.data);
  REQUIRE(b3.f_ds.data == b4.f_ds.data);
}

TEST_CASE("invariant and specific losses negate on shared estimates") {
  DisentangleModel model = small_model(41);
  // same head and same statistic nets => f_di == f_ds and shared estimates
  model.specific = model.invariant;
  model.mine_specific = model.mine_invariant;
  const FeatureBundle bs = extract(model, random_batch(12, 2, 42), 0);
  const FeatureBundle bi = extract(model, random_batch(12, 2, 43), 1);
  const FeatureBundle bt = extract(model, random_batch(12, 2, 44), 2);

  Rng r1(9), r2(9);
  const MiLossResult inv = invariant_loss(model, bs, bi, bt, r1);
  const MiLossResult spec = specific_loss(model, bs, bi, bt, r2);
  REQUIRE(inv.value == -spec.value);

  // the loss is exactly the signed sum of the three pair estimates
  REQUIRE(inv.value == -(inv.estimates[0] + inv.estimates[1] + inv.estimates[2]));
  REQUIRE(spec.value == spec.estimates[0] + spec.estimates[1] + spec.estimates[2]);

  // batch-size mismatch is a dimension error
  const FeatureBundle small = extract(model, random_batch(6, 2, 45), 1);
  REQUIRE_THROWS_AS(invariant_loss(model, bs, small, bt, r1), DimensionError);
}

TEST_CASE("invariant loss gradients match finite differences") {
  const DisentangleModel model = small_model(51);
  const Matrix xs = random_batch(8, 2, 52);
  const Matrix xi = random_batch(8, 2, 53);
  const Matrix xt = random_batch(8, 2, 54);

  auto loss_with = [&](const DisentangleModel& m) {
    const FeatureBundle bs = extract(m, xs, 0);
    const FeatureBundle bi = extract(m, xi, 1);
    const FeatureBundle bt = extract(m, xt, 2);
    Rng rng(99);
    return invariant_loss(m, bs, bi, bt, rng).value;
  };

  const FeatureBundle bs = extract(model, xs, 0);
  const FeatureBundle bi = extract(model, xi, 1);
  const FeatureBundle bt = extract(model, xt, 2);
  Rng rng(99);
  const MiLossResult res = invariant_loss(model, bs, bi, bt, rng);

  auto f_loss = [&](const MlpNetwork& f) {
    DisentangleModel m = model;
    m.feature = f;
    return loss_with(m);
  };
  REQUIRE(finite_diff_check(f_loss, model.feature, res.feature_grads, 1e-5) < 1e-4);

  auto i_loss = [&](const MlpNetwork& inet) {
    DisentangleModel m = model;
    m.invariant = inet;
    return loss_with(m);
  };
  REQUIRE(finite_diff_check(i_loss, model.invariant, res.head_grads, 1e-5) < 1e-4);

  // ascent gradients for the statistic nets are gradients of the raw
  // bounds, checked on the source-intermediate pair
  auto t_bound = [&](const MlpNetwork& t) {
    DisentangleModel m = model;
    m.mine_invariant[kSourceIntermediate] = t;
    const FeatureBundle s = extract(m, xs, 0);
    const FeatureBundle i = extract(m, xi, 1);
    Rng r(99);
    return mine_lower_bound(m.mine_invariant[kSourceIntermediate], s.f_di, i.f_di, r).value;
  };
  REQUIRE(finite_diff_check(t_bound, model.mine_invariant[kSourceIntermediate],
                            res.statistic_grads[kSourceIntermediate], 1e-5) < 1e-4);
}

TEST_CASE("specific loss gradients match finite differences") {
  const DisentangleModel model = small_model(61);
  const Matrix xs = random_batch(8, 2, 62);
  const Matrix xi = random_batch(8, 2, 63);
  const Matrix xt = random_batch(8, 2, 64);

  const FeatureBundle bs = extract(model, xs, 0);
  const FeatureBundle bi = extract(model, xi, 1);
  const FeatureBundle bt = extract(model, xt, 2);
  Rng rng(88);
  const MiLossResult res = specific_loss(model, bs, bi, bt, rng);

  auto f_loss = [&](const MlpNetwork& f) {
    DisentangleModel m = model;
    m.feature = f;
    const FeatureBundle s = extract(m, xs, 0);
    const FeatureBundle i = extract(m, xi, 1);
    const FeatureBundle t = extract(m, xt, 2);
    Rng r(88);
    return specific_loss(m, s, i, t, r).value;
  };
  REQUIRE(finite_diff_check(f_loss, model.feature, res.feature_grads, 1e-5) < 1e-4);

  auto s_loss = [&](const MlpNetwork& snet) {
    DisentangleModel m = model;
    m.specific = snet;
    const FeatureBundle s = extract(m, xs, 0);
    const FeatureBundle i = extract(m, xi, 1);
    const FeatureBundle t = extract(m, xt, 2);
    Rng r(88);
    return specific_loss(m, s, i, t, r).value;
  };
  REQUIRE(finite_diff_check(s_loss, model.specific, res.head_grads, 1e-5) < 1e-4);
}

TEST_CASE("classification loss formula and gradients") {
  DisentangleModel model = small_model(71, 2, 5);
  // zero classifier weights give a uniform prediction: loss = ln M
  for (Matrix& w : model.classifier.weights)
    for (double& v : w.data) v = 0.0;
  for (Matrix& b : model.classifier.biases)
    for (double& v : b.data) v = 0.0;
  const Matrix xs = random_batch(6, 2, 72);
  const FeatureBundle bs = extract(model, xs, 0);
  const CeLossResult uniform = classification_loss(model, bs, {0, 1, 2, 3, 4, 0});
  REQUIRE(uniform.value == Catch::Approx(std::log(5.0)).epsilon(1e-12));

  // label outside [0, M) is a data error
  REQUIRE_THROWS_AS(classification_loss(model, bs, {0, 1, 2, 3, 4, 5}), DataError);

  // near-one-hot prediction on the true class drives the loss to zero
  model.classifier.biases[0](0, 2) = 60.0;
  const FeatureBundle bs2 = extract(model, xs, 0);
  const CeLossResult hot = classification_loss(model, bs2, {2, 2, 2, 2, 2, 2});
  REQUIRE(hot.value >= 0.0);
  REQUIRE(hot.value < 1e-12);
}

TEST_CASE("classification loss p=1/4 hand case") {
  // single softmax layer with zero weights and biases (ln 1, ln 3):
  // probabilities are exactly (1/4, 3/4)
  DisentangleModel model = small_model(81, 2, 2);
  for (Matrix& w : model.classifier.weights)
    for (double& v : w.data) v = 0.0;
  model.classifier.biases[0](0, 0) = 0.0;
  model.classifier.biases[0](0, 1) = std::log(3.0);
  const Matrix xs = random_batch(2, 2, 82);
  const FeatureBundle bs = extract(model, xs, 0);
  const CeLossResult res = classification_loss(model, bs, {0, 0});
  REQUIRE(res.value == Catch::Approx(-std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("classification loss gradients match finite differences") {
  const DisentangleModel model = small_model(91);
  const Matrix xs = random_batch(8, 2, 92);
  const std::vector<int> labels{0, 1, 0, 1, 1, 0, 0, 1};

  const FeatureBundle bs = extract(model, xs, 0);
  const CeLossResult res = classification_loss(model, bs, labels);

  auto with_model = [&](const DisentangleModel& m) {
    return classification_loss(m, extract(m, xs, 0), labels).value;
  };
  auto c_loss = [&](const MlpNetwork& c) {
    DisentangleModel m = model;
    m.classifier = c;
    return with_model(m);
  };
  auto i_loss = [&](const MlpNetwork& inet) {
    DisentangleModel m = model;
    m.invariant = inet;
    return with_model(m);
  };
  auto f_loss = [&](const MlpNetwork& f) {
    DisentangleModel m = model;
    m.feature = f;
    return with_model(m);
  };
  REQUIRE(finite_diff_check(c_loss, model.classifier, res.classifier_grads, 1e-5) < 1e-4);
  REQUIRE(finite_diff_check(i_loss, model.invariant, res.invariant_grads, 1e-5) < 1e-4);
  REQUIRE(finite_diff_check(f_loss, model.feature, res.feature_grads, 1e-5) < 1e-4);
}

TEST_CASE("disentangle_step with zero rates reports losses without touching the model") {
  DisentangleModel model = small_model(101);
  const DisentangleModel before = model;
  const Matrix xs = random_batch(10, 2, 102);
  const Matrix xi = random_batch(10, 2, 103);
  const Matrix xt = random_batch(10, 2, 104);
  Rng rng(7);
  const DisentangleReport report =
      disentangle_step(model, xs, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, xi, xt, {0.0, 0.0}, rng);
  REQUIRE(std::isfinite(report.l_mi));
  REQUIRE(std::isfinite(report.l_ms));
  REQUIRE(report.l_ce > 0.0);
  REQUIRE(model.feature.weights[0].data == before.feature.weights[0].data);
  REQUIRE(model.specific.weights[1].data == before.specific.weights[1].data);
  REQUIRE(model.mine_invariant[0].weights[0].data == before.mine_invariant[0].weights[0].data);
}

TEST_CASE("repeated disentangle steps shrink the classification loss") {
  DisentangleModel model = small_model(111);
  const auto domains = generate_rotated_gaussians(64, {0.0, 45.0, 90.0}, 0.25, 112);
  Rng rng(113);
  double first = 0.0, last = 0.0;
  int upticks = 0;
  double prev = 0.0;
  for (int step = 0; step < 100; ++step) {
    const DisentangleReport r = disentangle_step(model, domains[0].features, domains[0].labels,
                                                 domains[1].features, domains[2].features,
                                                 {0.05, 0.1}, rng);
    if (step == 0) first = r.l_ce;
    if (step > 0 && r.l_ce > prev + 1e-12) ++upticks;
    prev = r.l_ce;
    last = r.l_ce;
  }
  REQUIRE(last < first);
  REQUIRE(upticks <= 5);
}
