// Central finite-difference references for the analytic gradients.
#pragma once

#include "seqot/seqot.hpp"

namespace seqot::testing {

/// Tight solver settings for derivative checks: the FD quotient needs the
/// loss to be resolved well below h * |grad|. Near-tied assignments need
/// tens of thousands of proximal steps before the plan settles on a vertex.
inline SolverConfig converged_config() {
  SolverConfig cfg;
  cfg.inner_k = 10;
  cfg.outer_iters = 50000;
  cfg.tolerance = 1e-13;
  return cfg;
}

/// Flow supports are unnormalised Gaussian draws, so squared distances get
/// large enough for exp(-C/0.5) to underflow. A wider proximal step avoids it.
inline SolverConfig flow_converged_config() {
  SolverConfig cfg = converged_config();
  cfg.beta = 1.0;
  return cfg;
}

inline double relative_error(const Matrix& analytic, const Matrix& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-8);
}

inline Matrix fd_embedding_gradient(const Matrix& gen, const EmbeddedSequence& ref, CostKind kind,
                                    const SolverConfig& cfg, double h = 1e-5) {
  Matrix g(gen.rows(), gen.cols());
  for (Eigen::Index i = 0; i < gen.rows(); ++i)
    for (Eigen::Index d = 0; d < gen.cols(); ++d) {
      Matrix p = gen, m = gen;
      p(i, d) += h;
      m(i, d) -= h;
      g(i, d) = (seq_ot_loss(EmbeddedSequence(p), ref, kind, cfg).loss -
                 seq_ot_loss(EmbeddedSequence(m), ref, kind, cfg).loss) /
                (2 * h);
    }
  return g;
}

inline Matrix fd_logit_gradient(const Matrix& logits, double tau, const EmbeddingTable& table,
                                const EmbeddedSequence& ref, CostKind kind, const SolverConfig& cfg,
                                double h = 1e-5) {
  Matrix g(logits.rows(), logits.cols());
  auto loss = [&](const Matrix& l) { return seq_ot_loss(soft_embed_logits(l, tau, table), ref, kind, cfg).loss; };
  for (Eigen::Index t = 0; t < logits.rows(); ++t)
    for (Eigen::Index v = 0; v < logits.cols(); ++v) {
      Matrix p = logits, m = logits;
      p(t, v) += h;
      m(t, v) -= h;
      g(t, v) = (loss(p) - loss(m)) / (2 * h);
    }
  return g;
}

inline Vector fd_surrogate_gradient(const FlowState& s, const SolverConfig& cfg, double h = 1e-5) {
  Vector g(s.theta.size());
  for (Eigen::Index k = 0; k < s.theta.size(); ++k) {
    FlowState p = s, m = s;
    p.theta(k) += h;
    m.theta(k) -= h;
    g(k) = (flow_surrogate(p, cfg).loss - flow_surrogate(m, cfg).loss) / (2 * h);
  }
  return g;
}

/// Random 4-atom flow state away from the target.
inline FlowState random_flow_state(std::mt19937_64& rng, int k = 4, int dim = 2) {
  FlowState s = make_demo_flow(k, dim, rng());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < s.theta.size(); ++i) s.theta(i) = normal(rng);
  return s;
}

}  // namespace seqot::testing
