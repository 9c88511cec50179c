#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/rng.hpp"

namespace rdsel {

// Uniformly weighted point cloud: n support points in R^d, mass 1/n each.
struct EmpiricalDistribution {
  Matrix support;

  std::size_t size() const { return support.rows; }
  std::size_t dim() const { return support.cols; }
};

enum class DistanceMethod { exact, sliced };

struct DistanceReport {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::exact;
  std::size_t n_projections = 0;
};

namespace detail {

inline double euclidean(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

// Minimum-cost perfect matching on a square cost matrix via the
// Jonker-Volgenant shortest augmenting path scheme with dual potentials,
// O(n^3). Returns the column assigned to each row.
inline std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Exact 1-D W1 between empirical distributions with uniform weights,
// possibly of different sizes. Integrates |F_a^{-1} - F_b^{-1}| over the
// merged quantile grid; segment masses are tracked as integer multiples
// of 1/(n*m) so the walk is exact.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::uint64_t n = a.size(), m = b.size();
  std::uint64_t i = 0, j = 0, cur = 0;
  const std::uint64_t total = n * m;
  double acc = 0.0;
  while (cur < total) {
    const std::uint64_t ua = (i + 1) * m;
    const std::uint64_t ub = (j + 1) * n;
    const std::uint64_t nxt = std::min(ua, ub);
    acc += static_cast<double>(nxt - cur) * std::fabs(a[i] - b[j]);
    cur = nxt;
    if (ua == nxt) ++i;
    if (ub == nxt) ++j;
  }
  return acc / static_cast<double>(total);
}

}  // namespace detail

constexpr std::size_t kExactSizeLimit = 64;

// W1 with Euclidean ground cost between equal-size uniform clouds, via
// optimal assignment on the n x n cost matrix.
inline DistanceReport wasserstein_exact(const EmpiricalDistribution& a,
                                        const EmpiricalDistribution& b) {
  if (a.dim() != b.dim())
    throw DimensionError("wasserstein_exact: point dimensions differ");
  if (a.size() == 0 || b.size() == 0)
    throw ConfigError("wasserstein_exact: empty support");
  if (a.size() != b.size())
    throw ConfigError("wasserstein_exact: supports differ in size; use wasserstein_sliced");
  const std::size_t n = a.size();
  if (n > kExactSizeLimit)
    throw SizeError("wasserstein_exact: n > " + std::to_string(kExactSizeLimit));
  Matrix cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost(i, j) = detail::euclidean(a.support.row(i), b.support.row(j), a.dim());
  const auto match = detail::solve_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost(i, match[i]);
  return {total / static_cast<double>(n), DistanceMethod::exact, 0};
}

// Sliced W1: average of exact 1-D W1 over seeded random unit directions.
// Handles unequal support sizes.
inline DistanceReport wasserstein_sliced(const EmpiricalDistribution& a,
                                         const EmpiricalDistribution& b,
                                         std::size_t n_projections, Rng& rng) {
  if (a.dim() != b.dim())
    throw DimensionError("wasserstein_sliced: point dimensions differ");
  if (a.dim() == 0) throw ConfigError("wasserstein_sliced: zero-dimensional features");
  if (a.size() == 0 || b.size() == 0)
    throw ConfigError("wasserstein_sliced: empty support");
  if (n_projections < 1) throw ConfigError("wasserstein_sliced: need n_projections >= 1");
  const std::size_t d = a.dim();
  std::vector<double> dir(d), pa(a.size()), pb(b.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < n_projections; ++t) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        dir[k] = rng.normal();
        norm += dir[k] * dir[k];
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (std::size_t k = 0; k < d; ++k) dir[k] /= norm;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double* row = a.support.row(i);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += row[k] * dir[k];
      pa[i] = s;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double* row = b.support.row(i);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += row[k] * dir[k];
      pb[i] = s;
    }
    acc += detail::wasserstein_1d(pa, pb);
  }
  return {acc / static_cast<double>(n_projections), DistanceMethod::sliced, n_projections};
}

inline DistanceReport wasserstein_sliced(const EmpiricalDistribution& a,
                                         const EmpiricalDistribution& b,
                                         std::size_t n_projections, std::uint64_t seed) {
  Rng rng(seed);
  return wasserstein_sliced(a, b, n_projections, rng);
}

// Symmetric matrix of pairwise distances between clouds. Each unordered
// pair is evaluated once and mirrored, so symmetry is exact.
inline Matrix pairwise_distances(const std::vector<Matrix>& supports, DistanceMethod method,
                                 std::size_t n_projections, std::uint64_t seed) {
  if (supports.size() < 2)
    throw ConfigError("pairwise_distances: need at least two distributions");
  for (const Matrix& s : supports)
    if (s.cols != supports.front().cols)
      throw DimensionError("pairwise_distances: inconsistent feature dimension");
  const std::size_t n = supports.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      EmpiricalDistribution a{supports[i]};
      EmpiricalDistribution b{supports[j]};
      Rng pair_rng = Rng(seed).fork(i * n + j);
      const double v = (method == DistanceMethod::exact)
                           ? wasserstein_exact(a, b).value
                           : wasserstein_sliced(a, b, n_projections, pair_rng).value;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

}  // namespace rdsel
