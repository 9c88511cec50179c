#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "catch_amalgamated.hpp"
#include "rdsel/rng.hpp"
#include "rdsel/transport.hpp"

using namespace rdsel;

namespace {

EmpiricalDistribution random_cloud(std::size_t n, std::size_t d, Rng& rng, double scale = 2.0) {
  EmpiricalDistribution e;
  e.support = Matrix(n, d);
  for (double& v : e.support.data) v = rng.uniform(-scale, scale);
  return e;
}

// Brute-force W1 over all n! assignments.
double brute_force_w1(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.dim(); ++k) {
        const double diff = a.support(i, k) - b.support(perm[i], k);
        s += diff * diff;
      }
      total += std::sqrt(s);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace

TEST_CASE("exact W1 identity and hand case") {
  Rng rng(1);
  const auto a = random_cloud(6, 3, rng);
  REQUIRE(wasserstein_exact(a, a).value == Catch::Approx(0.0).margin(1e-12));

  // 1-D supports {0,1} vs {2,3}: sorted matching costs (2,2), mean 2
  EmpiricalDistribution x, y;
  x.support = Matrix(2, 1);
  x.support.data = {0.0, 1.0};
  y.support = Matrix(2, 1);
  y.support.data = {2.0, 3.0};
  REQUIRE(wasserstein_exact(x, y).value == Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exact W1 equals permutation brute force") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(4);  // up to 5
    const std::size_t d = 1 + rng.index(3);
    const auto a = random_cloud(n, d, rng);
    const auto b = random_cloud(n, d, rng);
    const double exact = wasserstein_exact(a, b).value;
    REQUIRE(exact == Catch::Approx(brute_force_w1(a, b)).margin(1e-9));
  }
}

TEST_CASE("exact W1 contract errors") {
  Rng rng(3);
  const auto a = random_cloud(4, 2, rng);
  const auto b = random_cloud(5, 2, rng);
  REQUIRE_THROWS_AS(wasserstein_exact(a, b), ConfigError);
  const auto c = random_cloud(4, 3, rng);
  REQUIRE_THROWS_AS(wasserstein_exact(a, c), DimensionError);
  const auto big_a = random_cloud(65, 2, rng);
  const auto big_b = random_cloud(65, 2, rng);
  REQUIRE_THROWS_AS(wasserstein_exact(big_a, big_b), SizeError);
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(5);  // up to 6
    const std::size_t d = 1 + rng.index(3);
    const auto a = random_cloud(n, d, rng);
    const auto b = random_cloud(n, d, rng);
    const auto c = random_cloud(n, d, rng);
    const double ab = wasserstein_exact(a, b).value;
    const double ba = wasserstein_exact(b, a).value;
    const double ac = wasserstein_exact(a, c).value;
    const double cb = wasserstein_exact(c, b).value;
    REQUIRE(ab >= 0.0);
    REQUIRE(ab == Catch::Approx(ba).margin(1e-9));
    REQUIRE(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("sliced equals exact in one dimension") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(7);
    const auto a = random_cloud(n, 1, rng);
    const auto b = random_cloud(n, 1, rng);
    const double exact = wasserstein_exact(a, b).value;
    // every unit direction in 1-D is +-1, so any projection count agrees
    const double sliced1 = wasserstein_sliced(a, b, 1, 99).value;
    const double sliced9 = wasserstein_sliced(a, b, 9, 123).value;
    REQUIRE(sliced1 == Catch::Approx(exact).margin(1e-9));
    REQUIRE(sliced9 == Catch::Approx(exact).margin(1e-9));
  }
}

TEST_CASE("sliced W1 is seed-deterministic and zero on identical clouds") {
  Rng rng(6);
  const auto a = random_cloud(40, 3, rng);
  const auto b = random_cloud(30, 3, rng);
  REQUIRE(wasserstein_sliced(a, a, 16, 7).value == Catch::Approx(0.0).margin(1e-12));
  const double v1 = wasserstein_sliced(a, b, 16, 7).value;
  const double v2 = wasserstein_sliced(a, b, 16, 7).value;
  REQUIRE(v1 == v2);
  REQUIRE(v1 > 0.0);
}

TEST_CASE("sliced W1 on unequal sizes matches quantile oracle") {
  // supports {0, 1} (mass 1/2 each) vs {0, 0, 3} (mass 1/3 each); the
  // quantile functions differ by 1 on [1/2, 2/3) and by 2 on [2/3, 1):
  // integral = 1/6 + 2/3 = 5/6
  EmpiricalDistribution a, b;
  a.support = Matrix(2, 1);
  a.support.data = {0.0, 1.0};
  b.support = Matrix(3, 1);
  b.support.data = {0.0, 0.0, 3.0};
  REQUIRE(wasserstein_sliced(a, b, 4, 11).value == Catch::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("sliced W1 approximates the mean-shift distance for blobs") {
  // Gaussian blobs centered (0,0) and (2,0): E over directions of the
  // projected mean shift is 2 E|cos theta| = 4/pi
  Rng rng(8);
  EmpiricalDistribution a, b;
  a.support = Matrix(2000, 2);
  b.support = Matrix(2000, 2);
  for (std::size_t i = 0; i < 2000; ++i) {
    a.support(i, 0) = 0.05 * rng.normal();
    a.support(i, 1) = 0.05 * rng.normal();
    b.support(i, 0) = 2.0 + 0.05 * rng.normal();
    b.support(i, 1) = 0.05 * rng.normal();
  }
  const double v = wasserstein_sliced(a, b, 64, 9).value;
  const double expected = 4.0 / std::numbers::pi;
  REQUIRE(std::fabs(v - expected) / expected < 0.15);
}

TEST_CASE("pairwise distances are symmetric with a zero diagonal") {
  Rng rng(10);
  std::vector<Matrix> supports;
  for (int i = 0; i < 4; ++i) supports.push_back(random_cloud(12, 3, rng).support);
  supports.push_back(supports.front());  // duplicate cloud

  const Matrix d = pairwise_distances(supports, DistanceMethod::exact, 0, 0);
  for (std::size_t i = 0; i < d.rows; ++i) {
    REQUIRE(d(i, i) == 0.0);
    for (std::size_t j = 0; j < d.cols; ++j) {
      REQUIRE(d(i, j) == Catch::Approx(d(j, i)).margin(1e-12));
      REQUIRE(d(i, j) >= 0.0);
    }
  }
  REQUIRE(d(0, 4) == Catch::Approx(0.0).margin(1e-12));

  const Matrix ds = pairwise_distances(supports, DistanceMethod::sliced, 8, 42);
  const Matrix ds2 = pairwise_distances(supports, DistanceMethod::sliced, 8, 42);
  REQUIRE(ds.data == ds2.data);
}
