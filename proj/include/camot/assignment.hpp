#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "camot/errors.hpp"

namespace camot {

struct AssignmentResult {
  std::vector<std::pair<int, int>> pairs; // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
};

namespace detail {

/// Jonker-Volgenant style shortest-augmenting-path assignment. Requires
/// rows <= cols; returns for each row the assigned column. Deterministic:
/// rows are augmented in order, ties fall to the lowest column index.
inline std::vector<int> solve_rectangular(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(m) + 1, 0);   // p[j]: row matched to column j (1-based)
  std::vector<int> way(static_cast<size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<size_t>(m) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<size_t>(j)] > 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;
  }
  return row_to_col;
}

} // namespace detail

/// Minimum-cost bipartite matching. Every pair whose cost exceeds `cost_gate`
/// is rejected into the unmatched sets, so callers working with similarities
/// pass cost = -similarity and cost_gate = -gate.
inline AssignmentResult linear_assignment(const Eigen::MatrixXd& cost, double cost_gate) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (!cost.allFinite()) {
    throw invalid_input_error("linear_assignment: cost matrix must be finite");
  }

  AssignmentResult res;
  if (n == 0 || m == 0) {
    for (int i = 0; i < n; ++i) res.unmatched_rows.push_back(i);
    for (int j = 0; j < m; ++j) res.unmatched_cols.push_back(j);
    return res;
  }

  std::vector<int> row_to_col;
  if (n <= m) {
    row_to_col = detail::solve_rectangular(cost);
  } else {
    const std::vector<int> col_to_row = detail::solve_rectangular(cost.transpose());
    row_to_col.assign(static_cast<size_t>(n), -1);
    for (int j = 0; j < m; ++j) {
      if (col_to_row[static_cast<size_t>(j)] >= 0) row_to_col[static_cast<size_t>(col_to_row[static_cast<size_t>(j)])] = j;
    }
  }

  std::vector<char> col_matched(static_cast<size_t>(m), 0);
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[static_cast<size_t>(i)];
    if (j >= 0 && cost(i, j) <= cost_gate) {
      res.pairs.emplace_back(i, j);
      col_matched[static_cast<size_t>(j)] = 1;
    } else {
      res.unmatched_rows.push_back(i);
    }
  }
  for (int j = 0; j < m; ++j) {
    if (!col_matched[static_cast<size_t>(j)]) res.unmatched_cols.push_back(j);
  }
  return res;
}

} // namespace camot
