// Discrete OT solvers: IPOT (proximal point), log-domain Sinkhorn and an
// exhaustive permutation oracle for small uniform square instances.
#pragma once

#include "seqot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace seqot {

namespace detail {

inline constexpr double kMinDenominator = 1e-300;

struct Marginals {
  Vector u;
  Vector v;
};

inline Marginals check_problem(const CostMatrix& c, Vector u, Vector v, const SolverConfig& cfg) {
  cfg.validate();
  require(u.size() == c.rows(), "solver: row marginal has length " + std::to_string(u.size()) +
                                    ", cost matrix has " + std::to_string(c.rows()) + " rows");
  require(v.size() == c.cols(), "solver: column marginal has length " + std::to_string(v.size()) +
                                    ", cost matrix has " + std::to_string(c.cols()) + " columns");
  normalize_simplex(u, "row marginal");
  normalize_simplex(v, "column marginal");
  return {std::move(u), std::move(v)};
}

inline SolverReport failure_report(int iterations) {
  SolverReport r;
  r.iterations_used = iterations;
  r.status = SolverStatus::numerical_failure;
  return r;
}

inline SolverReport finish_report(const CostMatrix& c, Matrix t, const Marginals& m, int iterations,
                                  bool converged) {
  if (!t.allFinite()) return failure_report(iterations);
  t = t.cwiseMax(0.0);
  TransportPlan plan(std::move(t), m.u, m.v);
  SolverReport r;
  r.marginal_residual = plan_residual(plan);
  r.distance = frobenius_dot(plan.matrix(), c.values());
  r.plan = std::move(plan);
  r.iterations_used = iterations;
  r.converged = converged;
  r.status = converged ? SolverStatus::ok : SolverStatus::max_iters;
  return r;
}

// out = num ./ den. Zero-mass entries stay zero; any other denominator below
// kMinDenominator is a failure.
inline bool guarded_quotient(const Vector& num, const Vector& den, Vector& out) {
  out.resize(num.size());
  for (Eigen::Index i = 0; i < num.size(); ++i) {
    if (num(i) == 0.0) {
      out(i) = 0.0;
      continue;
    }
    if (!(den(i) >= kMinDenominator)) return false;
    out(i) = num(i) / den(i);
  }
  return true;
}

inline double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((x.array() - mx).exp().sum());
}

}  // namespace detail

/// Inexact proximal point OT with a generalized-KL proximity term.
///
/// A = exp(-C / beta), T(1) = 1 1^T. Each outer step forms Q = A .* T and
/// runs `inner_k` scaling sweeps delta = u ./ (Q sigma), sigma = v ./ (Q^T delta),
/// then sets T = diag(delta) Q diag(sigma). Stops once ||T(t+1) - T(t)||_F is
/// at most `tolerance` and the marginals hold to 1e-6.
inline SolverReport ipot_solve(const CostMatrix& c, Vector u, Vector v, const SolverConfig& cfg = {}) {
  const detail::Marginals m = detail::check_problem(c, std::move(u), std::move(v), cfg);
  const Eigen::Index n = c.rows();
  const Eigen::Index cols = c.cols();

  const Matrix a = (-c.values().array() / cfg.beta).exp().matrix();
  if ((a.rowwise().sum().array() <= 0.0).any() || (a.colwise().sum().array() <= 0.0).any())
    return detail::failure_report(0);

  Matrix t = Matrix::Ones(n, cols);
  Vector sigma = Vector::Constant(cols, 1.0 / static_cast<double>(cols));
  Vector delta(n);
  Matrix q(n, cols);

  bool converged = false;
  int iter = 0;
  while (iter < cfg.outer_iters) {
    ++iter;
    q = a.cwiseProduct(t);
    for (int k = 0; k < cfg.inner_k; ++k) {
      if (!detail::guarded_quotient(m.u, q * sigma, delta)) return detail::failure_report(iter);
      if (!detail::guarded_quotient(m.v, q.transpose() * delta, sigma)) return detail::failure_report(iter);
    }
    Matrix next = delta.asDiagonal() * q * sigma.asDiagonal();
    if (!next.allFinite()) return detail::failure_report(iter);
    const double change = (next - t).norm();
    t.swap(next);
    if (change <= cfg.tolerance) {
      const double row_err = (t.rowwise().sum() - m.u).cwiseAbs().maxCoeff();
      const double col_err = (t.colwise().sum().transpose() - m.v).cwiseAbs().maxCoeff();
      if (std::max(row_err, col_err) <= kFeasibilityTolerance) {
        converged = true;
        break;
      }
    }
  }
  return detail::finish_report(c, std::move(t), m, iter, converged);
}

/// Entropy-regularized OT, min <T, C> - (1/epsilon) H(T), solved by Sinkhorn
/// scaling on the kernel exp(-epsilon C). Larger epsilon means weaker
/// regularization. Iterates in the log domain on dual potentials.
inline SolverReport sinkhorn_solve(const CostMatrix& c, Vector u, Vector v, const SolverConfig& cfg = {}) {
  const detail::Marginals m = detail::check_problem(c, std::move(u), std::move(v), cfg);
  const Eigen::Index n = c.rows();
  const Eigen::Index cols = c.cols();

  const Matrix log_k = -cfg.epsilon * c.values();
  const Vector log_u = m.u.array().log().matrix();
  const Vector log_v = m.v.array().log().matrix();
  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(cols);

  auto plan_from = [&](const Vector& ff, const Vector& gg) {
    Matrix t(n, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < n; ++i) t(i, j) = std::exp(ff(i) + gg(j) + log_k(i, j));
    return t;
  };
  auto bad = [](const Vector& x) { return x.array().isNaN().any() || (x.array() == std::numeric_limits<double>::infinity()).any(); };

  Matrix t = plan_from(f, g);
  bool converged = false;
  int iter = 0;
  Vector buf_row(cols);
  Vector buf_col(n);
  while (iter < cfg.outer_iters) {
    ++iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      buf_row = log_k.row(i).transpose() + g;
      const double lse = detail::log_sum_exp(buf_row);
      if (!std::isfinite(lse)) return detail::failure_report(iter);
      f(i) = log_u(i) - lse;
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      buf_col = log_k.col(j) + f;
      const double lse = detail::log_sum_exp(buf_col);
      if (!std::isfinite(lse)) return detail::failure_report(iter);
      g(j) = log_v(j) - lse;
    }
    if (bad(f) || bad(g)) return detail::failure_report(iter);

    Matrix next = plan_from(f, g);
    if (!next.allFinite()) return detail::failure_report(iter);
    const double change = (next - t).norm();
    t.swap(next);
    if (change <= cfg.tolerance) {
      const double row_err = (t.rowwise().sum() - m.u).cwiseAbs().maxCoeff();
      if (row_err <= kFeasibilityTolerance) {
        converged = true;
        break;
      }
    }
  }
  return detail::finish_report(c, std::move(t), m, iter, converged);
}

struct ExactSolution {
  double distance = 0.0;
  std::vector<int> permutation;  // row i is matched to column permutation[i]
};

inline constexpr int kMaxExactSize = 8;

/// Uniform-marginal OT on a square cost matrix by enumerating all
/// permutations. Ties resolve to the lexicographically smallest permutation.
inline ExactSolution exact_solve_uniform(const CostMatrix& c) {
  detail::require(c.rows() == c.cols(), "exact_solve_uniform: cost matrix must be square");
  detail::require(c.rows() <= kMaxExactSize, "exact_solve_uniform: n = " + std::to_string(c.rows()) +
                                                 " exceeds the oracle limit of " +
                                                 std::to_string(kMaxExactSize));
  const int n = static_cast<int>(c.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  ExactSolution best{std::numeric_limits<double>::infinity(), perm};
  double best_sum = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += c(i, perm[static_cast<std::size_t>(i)]);
    if (sum < best_sum) {
      best_sum = sum;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.distance = best_sum / n;
  return best;
}

struct DualPotentials {
  Vector row;
  Vector col;
};

/// Dual potentials (phi, psi) with phi_i + psi_j = C_ij on the support of a
/// (near-)optimal plan. The support is taken as a maximum-weight spanning
/// forest over entries above `support_threshold`; each connected component is
/// anchored at zero on its first node.
inline DualPotentials plan_dual_potentials(const TransportPlan& plan, const CostMatrix& c,
                                           double support_threshold = 1e-9) {
  detail::require(plan.rows() == c.rows() && plan.cols() == c.cols(),
                  "plan_dual_potentials: shape mismatch");
  const Eigen::Index n = plan.rows();
  const Eigen::Index m = plan.cols();
  const auto node_count = static_cast<std::size_t>(n + m);

  struct Edge {
    double weight;
    Eigen::Index i;
    Eigen::Index j;
  };
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (plan.matrix()(i, j) > support_threshold) edges.push_back({plan.matrix()(i, j), i, j});
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.weight > b.weight; });

  std::vector<std::size_t> parent(node_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<std::vector<std::pair<std::size_t, double>>> adj(node_count);
  for (const Edge& e : edges) {
    const auto a = static_cast<std::size_t>(e.i);
    const auto b = static_cast<std::size_t>(n + e.j);
    const std::size_t ra = find(a);
    const std::size_t rb = find(b);
    if (ra == rb) continue;
    parent[ra] = rb;
    adj[a].emplace_back(b, c(e.i, e.j));
    adj[b].emplace_back(a, c(e.i, e.j));
  }

  std::vector<double> value(node_count, 0.0);
  std::vector<char> seen(node_count, 0);
  for (std::size_t root = 0; root < node_count; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    std::queue<std::size_t> pending;
    pending.push(root);
    while (!pending.empty()) {
      const std::size_t x = pending.front();
      pending.pop();
      for (const auto& [y, cost] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        value[y] = cost - value[x];
        pending.push(y);
      }
    }
  }

  DualPotentials d{Vector(n), Vector(m)};
  for (Eigen::Index i = 0; i < n; ++i) d.row(i) = value[static_cast<std::size_t>(i)];
  for (Eigen::Index j = 0; j < m; ++j) d.col(j) = value[static_cast<std::size_t>(n + j)];
  return d;
}

}  // namespace seqot
