// Discretized Wasserstein gradient flow on a fixed finite support.
//
// The model distribution is nu = softmax(theta) over k shared support
// points. Each step takes a backtracking gradient-descent step on
//
//   L(theta) = KL(nu || p_d) + (1 / 2h) W2^2(p_d, nu)
//
// where W2^2 is computed by IPOT on the squared-Euclidean support costs and
// its gradient in nu is the column dual potential of the optimal plan.
#pragma once

#include "seqot/core.hpp"
#include "seqot/cost.hpp"
#include "seqot/embed.hpp"
#include "seqot/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace seqot {

/// sum_i q_i (log q_i - log p_i), with 0 log 0 = 0.
inline double kl_divergence(const Eigen::Ref<const Vector>& q, const Eigen::Ref<const Vector>& p) {
  detail::require(q.size() == p.size(), "kl_divergence: length mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q(i) == 0.0) continue;
    if (p(i) == 0.0)
      throw InputError("kl_divergence: q has mass at index " + std::to_string(i) + " where p is zero");
    kl += q(i) * (std::log(q(i)) - std::log(p(i)));
  }
  return std::max(kl, 0.0);
}

inline double tv_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

inline Vector softmax(const Eigen::Ref<const Vector>& theta) {
  return soft_argmax(theta, 1.0).probs();
}

/// IPOT settings for the flow's W2 term. Support costs here are squared
/// distances between spread-out points, and with K = 1 the plans near
/// degenerate marginals stay visibly infeasible after the iteration budget.
inline SolverConfig flow_solver_config() {
  SolverConfig cfg;
  cfg.beta = 2.0;
  cfg.inner_k = 10;
  return cfg;
}

/// Plan entries at or below this are treated as off-support when reading dual
/// potentials. IPOT leaves residual mass around 1e-8 on entries whose exact
/// value is zero.
inline constexpr double kFlowSupportThreshold = 1e-6;

struct W2Result {
  double value = 0.0;
  DualPotentials duals;
  SolverStatus status = SolverStatus::ok;
};

namespace detail {

inline W2Result w2_with_duals(const Vector& nu, const Vector& pd, const CostMatrix& support_cost,
                              const SolverConfig& cfg) {
  SolverReport r = ipot_solve(support_cost, pd, nu, cfg);
  if (!r.has_value()) throw SolverFailure("w2_squared: IPOT numerical failure");
  W2Result out;
  out.value = *r.distance;
  out.duals = plan_dual_potentials(*r.plan, support_cost, kFlowSupportThreshold);
  out.status = r.status;
  return out;
}

}  // namespace detail

/// W2^2(p_d, nu) between two weightings of the same support points.
inline double w2_squared(const Eigen::Ref<const Vector>& nu, const Eigen::Ref<const Vector>& pd,
                         const Eigen::Ref<const Matrix>& support, const SolverConfig& cfg = flow_solver_config()) {
  detail::require(nu.size() == support.rows() && pd.size() == support.rows(),
                  "w2_squared: weights must match the support size");
  const CostMatrix c = build_cost_matrix(support, support, CostKind::squared_euclidean);
  SolverReport r = ipot_solve(c, pd, nu, cfg);
  if (!r.has_value()) throw SolverFailure("w2_squared: IPOT numerical failure");
  return *r.distance;
}

struct FlowState {
  Matrix support;  // k x d
  Vector theta;    // logits of nu
  Vector target;   // p_d
  double h = 0.5;
  double eta = 0.1;

  Vector nu() const { return softmax(theta); }

  void validate() const {
    detail::require(support.rows() >= 1 && support.allFinite(), "flow state: support must be finite and non-empty");
    detail::require(theta.size() == support.rows(), "flow state: theta must have one entry per support point");
    detail::require(theta.allFinite(), "flow state: non-finite theta");
    detail::require(target.size() == support.rows(), "flow state: target must have one entry per support point");
    Vector t = target;
    detail::normalize_simplex(t, "flow target");
    detail::require((target.array() > 0.0).all(), "flow state: target must be strictly positive");
    detail::require(h > 0 && std::isfinite(h), "flow state: h must be positive");
    detail::require(eta > 0 && std::isfinite(eta), "flow state: eta must be positive");
  }
};

struct SurrogateEval {
  double kl = 0.0;
  double w2 = 0.0;
  double loss = 0.0;  // kl + w2 / (2h)
  Vector grad;        // d loss / d theta
};

/// Surrogate value and its gradient in theta.
inline SurrogateEval flow_surrogate(const FlowState& s, const SolverConfig& cfg = flow_solver_config()) {
  const CostMatrix c = build_cost_matrix(s.support, s.support, CostKind::squared_euclidean);
  const Vector nu = s.nu();
  SurrogateEval e;
  e.kl = kl_divergence(nu, s.target);
  const W2Result w = detail::w2_with_duals(nu, s.target, c, cfg);
  e.w2 = w.value;
  e.loss = e.kl + e.w2 / (2.0 * s.h);

  // d/dnu of KL is log(nu/p) + 1; the constant vanishes under the softmax Jacobian.
  Vector dnu = (nu.array().log() - s.target.array().log()).matrix() + w.duals.col / (2.0 * s.h);
  e.grad = nu.cwiseProduct(dnu) - nu * nu.dot(dnu);
  if (!e.grad.allFinite()) throw SolverFailure("flow_surrogate: non-finite gradient");
  return e;
}

inline double flow_loss(const FlowState& s, const SolverConfig& cfg = flow_solver_config()) {
  const Vector nu = s.nu();
  return kl_divergence(nu, s.target) + w2_squared(nu, s.target, s.support, cfg) / (2.0 * s.h);
}

struct JkoStep {
  FlowState state;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double kl_after = 0.0;
  double w2_after = 0.0;
  double step_used = 0.0;  // 0 when no descent step was found
  int halvings = 0;
};

inline constexpr int kMaxHalvings = 20;

namespace detail {

// Minimum-norm point of the convex hull of the rows of `g` (Frank-Wolfe with
// exact line search).
inline Vector min_norm_combination(const Matrix& g) {
  const Eigen::Index m = g.rows();
  if (m == 1) return g.row(0).transpose();
  const Matrix gram = g * g.transpose();
  Vector a = Vector::Constant(m, 1.0 / static_cast<double>(m));
  for (int it = 0; it < 1000; ++it) {
    const Vector grad = gram * a;
    Eigen::Index best = 0;
    grad.minCoeff(&best);
    Vector d = -a;
    d(best) += 1.0;
    const double curvature = d.dot(gram * d);
    if (curvature <= 0.0) break;
    const double step = std::clamp(-grad.dot(d) / curvature, 0.0, 1.0);
    if (step <= 0.0) break;
    a += step * d;
  }
  return g.transpose() * a;
}

}  // namespace detail

/// One descent step on the surrogate with backtracking.
///
/// The W2 term is piecewise linear in nu, so a plain gradient step can fail
/// to descend near a kink however small it is. Every rejected trial point
/// contributes its gradient to a bundle and the next trial moves along the
/// minimum-norm element of the bundle's convex hull, with the step halved.
/// Away from kinks the first trial is accepted and this is plain gradient
/// descent.
inline JkoStep jko_step(const FlowState& s, const SolverConfig& cfg = flow_solver_config()) {
  s.validate();
  const SurrogateEval e = flow_surrogate(s, cfg);
  JkoStep out{s, e.loss, e.loss, e.kl, e.w2, 0.0, 0};
  std::vector<Vector> bundle{e.grad};
  Vector direction = e.grad;
  double step = s.eta;
  for (int halving = 0; halving <= kMaxHalvings; ++halving) {
    FlowState trial = s;
    trial.theta = s.theta - step * direction;
    const SurrogateEval te = flow_surrogate(trial, cfg);
    if (te.loss <= e.loss) {
      out.state = std::move(trial);
      out.loss_after = te.loss;
      out.kl_after = te.kl;
      out.w2_after = te.w2;
      out.step_used = step;
      out.halvings = halving;
      return out;
    }
    bundle.push_back(te.grad);
    Matrix g(static_cast<Eigen::Index>(bundle.size()), s.theta.size());
    for (std::size_t b = 0; b < bundle.size(); ++b) g.row(static_cast<Eigen::Index>(b)) = bundle[b].transpose();
    direction = detail::min_norm_combination(g);
    step *= 0.5;
  }
  out.halvings = kMaxHalvings;
  return out;
}

struct FlowRecord {
  int step = 0;
  double kl = 0.0;
  double w2 = 0.0;
  double tv = 0.0;
};

struct FlowRun {
  std::vector<FlowRecord> trajectory;
  FlowState final_state;
  bool converged = false;
};

/// Iterates jko_step until TV(nu, p_d) <= stop_tv or max_steps is reached.
inline FlowRun run_flow(FlowState state, int max_steps, double stop_tv, const SolverConfig& cfg = flow_solver_config()) {
  detail::require(max_steps >= 1, "run_flow: max_steps must be >= 1");
  state.validate();
  FlowRun run{{}, state, false};
  for (int step = 1; step <= max_steps; ++step) {
    JkoStep js = jko_step(run.final_state, cfg);
    run.final_state = std::move(js.state);
    FlowRecord rec;
    rec.step = step;
    rec.kl = js.kl_after;
    rec.w2 = js.w2_after;
    rec.tv = tv_distance(run.final_state.nu(), run.final_state.target);
    run.trajectory.push_back(rec);
    if (rec.tv <= stop_tv) {
      run.converged = true;
      break;
    }
  }
  return run;
}

/// Seeded demo instance: k standard-normal support points in R^d, a target
/// with weights drawn from U(0.1, 1) and normalized, and a uniform start.
inline FlowState make_demo_flow(int k, int dim, std::uint64_t seed, double h = 0.5, double eta = 0.1) {
  detail::require(k >= 1 && dim >= 1, "make_demo_flow: k and dim must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  FlowState s;
  s.support = Matrix(k, dim);
  for (Eigen::Index i = 0; i < s.support.rows(); ++i)
    for (Eigen::Index j = 0; j < s.support.cols(); ++j) s.support(i, j) = normal(rng);
  s.target = Vector(k);
  for (Eigen::Index i = 0; i < k; ++i) s.target(i) = weight(rng);
  s.target /= s.target.sum();
  s.theta = Vector::Zero(k);
  s.h = h;
  s.eta = eta;
  return s;
}

}  // namespace seqot
