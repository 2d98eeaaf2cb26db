// Hard (exact token) matching and soft bipartite matching via the Hungarian
// algorithm.
#pragma once

#include "seqot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace seqot {

/// Multiset intersection size |A ∩ B|.
template <class RangeA, class RangeB>
std::size_t hard_match(const RangeA& a, const RangeB& b) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& tok : a) ++counts[std::string(tok)].first;
  for (const auto& tok : b) ++counts[std::string(tok)].second;
  std::size_t total = 0;
  for (const auto& [tok, c] : counts) total += std::min(c.first, c.second);
  return total;
}

struct MatchResult {
  std::vector<std::pair<int, int>> assignment;  // (row, column), sorted by row
  double total_cost = 0.0;

  /// Column assigned to each row.
  std::vector<int> permutation() const {
    std::vector<int> p(assignment.size());
    for (const auto& [i, j] : assignment) p[static_cast<std::size_t>(i)] = j;
    return p;
  }
};

namespace detail {

struct HungarianState {
  std::vector<int> row_to_col;
  std::vector<double> row_pot;
  std::vector<double> col_pot;
};

// O(n^3) shortest augmenting path with potentials; 1-indexed internally.
inline HungarianState hungarian_core(const Matrix& c) {
  const int n = static_cast<int>(c.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = c(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(p[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianState s;
  s.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] != 0) s.row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  s.row_pot.assign(u.begin() + 1, u.end());
  s.col_pot.assign(v.begin() + 1, v.end());
  return s;
}

// Among perfect matchings on tight edges (reduced cost within `tol` of zero),
// moves to the lexicographically smallest one. Every such matching is optimal.
inline void lexicographic_tighten(const Matrix& c, HungarianState& s, double tol) {
  const int n = static_cast<int>(c.rows());
  std::vector<std::vector<int>> tight(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(c(i, j) - s.row_pot[static_cast<std::size_t>(i)] - s.col_pot[static_cast<std::size_t>(j)]) <= tol)
        tight[static_cast<std::size_t>(i)].push_back(j);

  std::vector<int>& match = s.row_to_col;
  std::vector<int> owner(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) owner[static_cast<std::size_t>(match[static_cast<std::size_t>(i)])] = i;
  std::vector<char> fixed_col(static_cast<std::size_t>(n), 0);

  for (int i = 0; i < n; ++i) {
    const int target = match[static_cast<std::size_t>(i)];
    for (int j : tight[static_cast<std::size_t>(i)]) {
      if (j >= target) break;
      if (fixed_col[static_cast<std::size_t>(j)]) continue;
      // Find an alternating path that lets owner[j] give up j and ends by
      // taking the column `target` that row i releases.
      const int start = owner[static_cast<std::size_t>(j)];
      std::vector<int> prev_col(static_cast<std::size_t>(n), -2);  // column reached -> column it came from
      std::queue<int> rows;
      rows.push(start);
      prev_col[static_cast<std::size_t>(j)] = -1;
      int found = -1;
      while (!rows.empty() && found < 0) {
        const int r = rows.front();
        rows.pop();
        for (int cc : tight[static_cast<std::size_t>(r)]) {
          if (fixed_col[static_cast<std::size_t>(cc)] || prev_col[static_cast<std::size_t>(cc)] != -2) continue;
          prev_col[static_cast<std::size_t>(cc)] = match[static_cast<std::size_t>(r)];
          if (cc == target) {
            found = cc;
            break;
          }
          rows.push(owner[static_cast<std::size_t>(cc)]);
        }
      }
      if (found < 0) continue;
      // Walk back: each row along the path takes the column it reached.
      int cc = found;
      while (cc != j) {
        const int from = prev_col[static_cast<std::size_t>(cc)];
        const int r = owner[static_cast<std::size_t>(from)];
        match[static_cast<std::size_t>(r)] = cc;
        owner[static_cast<std::size_t>(cc)] = r;
        cc = from;
      }
      match[static_cast<std::size_t>(i)] = j;
      owner[static_cast<std::size_t>(j)] = i;
      break;
    }
    fixed_col[static_cast<std::size_t>(match[static_cast<std::size_t>(i)])] = 1;
  }
}

}  // namespace detail

/// Minimum-cost perfect matching on a square cost matrix. Among optimal
/// assignments the lexicographically smallest (by row order) is returned.
inline MatchResult hungarian(const CostMatrix& c) {
  detail::require(c.rows() == c.cols(), "hungarian: cost matrix must be square, got " +
                                            std::to_string(c.rows()) + "x" + std::to_string(c.cols()));
  const Matrix& values = c.values();
  detail::HungarianState s = detail::hungarian_core(values);
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  detail::lexicographic_tighten(values, s, 1e-9 * scale);

  MatchResult r;
  const int n = static_cast<int>(c.rows());
  for (int i = 0; i < n; ++i) {
    const int j = s.row_to_col[static_cast<std::size_t>(i)];
    r.assignment.emplace_back(i, j);
    r.total_cost += values(i, j);
  }
  return r;
}

/// Pads a rectangular cost matrix to square with 10x its largest entry.
inline Matrix pad_to_square(const Matrix& c) {
  const Eigen::Index n = std::max(c.rows(), c.cols());
  const double fill = 10.0 * std::max(c.maxCoeff(), 0.0);
  Matrix out = Matrix::Constant(n, n, fill);
  out.topLeftCorner(c.rows(), c.cols()) = c;
  return out;
}

}  // namespace seqot
