#include "cval/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cval/kernels.hpp"

namespace cval {

std::string to_string(MatchStrategy s) {
  return s == MatchStrategy::centroid_distance ? "centroid_distance"
                                               : "intersection_via_transfer";
}

namespace {

// Kuhn-Munkres with potentials; square cost matrix, returns row -> col.
std::vector<std::size_t> hungarian(const Matrix& cost) {
  std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double assignment_total(const Matrix& cost,
                        const std::vector<std::size_t>& row_to_col) {
  double t = 0.0;
  for (std::size_t i = 0; i < row_to_col.size(); ++i)
    t += cost(i, row_to_col[i]);
  return t;
}

}  // namespace

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols())
    fail(ErrorCode::invalid_data, "assignment cost matrix must be square");
  std::size_t n = cost.rows();
  if (n == 0) return {};

  double optimum = assignment_total(cost, hungarian(cost));
  double scale = 1.0;
  for (double c : cost.data()) scale = std::max(scale, std::abs(c));
  double eps = scale * 1e-9;

  // Lexicographic refinement: fix rows in order to the smallest column
  // that still admits an optimal completion. n is tiny here (k x k).
  std::vector<std::size_t> fixed(n, n);
  std::vector<bool> col_taken(n, false);
  const double big = scale * static_cast<double>(n + 1) * 4.0 + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      if (col_taken[c]) continue;
      Matrix trial = cost;
      for (std::size_t r = 0; r <= i; ++r) {
        std::size_t want = (r == i) ? c : fixed[r];
        for (std::size_t j = 0; j < n; ++j)
          if (j != want) trial(r, j) = big;
      }
      double t = assignment_total(trial, hungarian(trial));
      if (t <= optimum + eps) {
        fixed[i] = c;
        col_taken[c] = true;
        break;
      }
    }
    if (fixed[i] == n)
      fail(ErrorCode::invalid_data, "assignment refinement failed");
  }
  return fixed;
}

namespace {

ClusterMatching from_cost(const Matrix& cost, std::size_t k_val,
                          std::size_t k_disc, MatchStrategy strategy,
                          bool maximize, double objective_sign_base) {
  // Pad to square with zero-cost dummies; pairs touching a dummy become
  // unpaired entries.
  std::size_t n = std::max(k_val, k_disc);
  Matrix square(n, n, 0.0);
  for (std::size_t i = 0; i < k_val; ++i)
    for (std::size_t j = 0; j < k_disc; ++j)
      square(i, j) = maximize ? objective_sign_base - cost(i, j) : cost(i, j);

  auto row_to_col = solve_assignment(square);

  ClusterMatching m;
  m.strategy = strategy;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = row_to_col[i];
    if (i < k_val && j < k_disc) {
      double contribution = cost(i, j);
      m.assignment.push_back({static_cast<int>(i) + 1,
                              static_cast<int>(j) + 1, contribution});
      m.objective_value += contribution;
    } else if (i < k_val) {
      m.unpaired_validation.push_back(static_cast<int>(i) + 1);
    } else if (j < k_disc) {
      m.unpaired_discovery.push_back(static_cast<int>(j) + 1);
    }
  }
  return m;
}

const Matrix& representation(const ClusterModel& model) {
  if (model.centroids) return *model.centroids;
  if (model.medoid_coords) return *model.medoid_coords;
  fail(ErrorCode::invalid_data,
       "model exposes neither centroids nor medoid coordinates");
}

}  // namespace

ClusterMatching match_by_centroids(const ClusterModel& model2,
                                   const ClusterModel& model1) {
  const Matrix& c2 = representation(model2);
  const Matrix& c1 = representation(model1);
  if (c2.cols() != c1.cols())
    fail(ErrorCode::schema_mismatch,
         "centroid dimensionality differs between models");
  Matrix cost(c2.rows(), c1.rows());
  for (std::size_t i = 0; i < c2.rows(); ++i)
    for (std::size_t j = 0; j < c1.rows(); ++j)
      cost(i, j) = std::sqrt(kernels::ops().squared_distance(
          c2.row(i).data(), c1.row(j).data(), c2.cols()));
  return from_cost(cost, c2.rows(), c1.rows(),
                   MatchStrategy::centroid_distance, false, 0.0);
}

ClusterMatching match_by_intersection(const Partition& c2md,
                                      const Partition& c2tf) {
  auto table = contingency_table(c2md, c2tf);
  auto k1 = static_cast<std::size_t>(c2md.k);
  auto k2 = static_cast<std::size_t>(c2tf.k);
  Matrix counts(k1, k2);
  double maxval = 0.0;
  for (std::size_t i = 0; i < k1; ++i)
    for (std::size_t j = 0; j < k2; ++j) {
      counts(i, j) = static_cast<double>(table[i][j]);
      maxval = std::max(maxval, counts(i, j));
    }
  return from_cost(counts, k1, k2, MatchStrategy::intersection_via_transfer,
                   true, maxval);
}

}  // namespace cval
