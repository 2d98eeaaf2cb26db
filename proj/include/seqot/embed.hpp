// Belief encodings over a vocabulary, sequence embedding, the sequence-level
// OT losses and their envelope gradients.
#pragma once

#include "seqot/core.hpp"
#include "seqot/cost.hpp"
#include "seqot/solvers.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace seqot {

/// Raised when a solver cannot produce a plan for a loss or gradient.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultTau = 0.9;
inline constexpr double kDefaultGammaSeq = 0.1;
inline constexpr const char* kUnkToken = "UNK";

/// Token -> d-dimensional vector lookup (the matrix E, one row per token).
class EmbeddingTable {
 public:
  EmbeddingTable(std::vector<std::string> tokens, Matrix vectors)
      : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
    detail::require(static_cast<Eigen::Index>(tokens_.size()) == vectors_.rows(),
                    "embedding table: token count does not match row count");
    detail::require(vectors_.cols() >= 1, "embedding table: dimension must be >= 1");
    detail::require(vectors_.allFinite(), "embedding table: non-finite entry");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], static_cast<Eigen::Index>(i)).second)
        throw InputError("embedding table: duplicate token '" + tokens_[i] + "'");
    }
  }

  Eigen::Index vocab_size() const { return vectors_.rows(); }
  Eigen::Index dimension() const { return vectors_.cols(); }
  const Matrix& vectors() const { return vectors_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<Eigen::Index> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

 private:
  std::vector<std::string> tokens_;
  Matrix vectors_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

/// A probability vector over the vocabulary.
class BeliefVector {
 public:
  explicit BeliefVector(Vector probs) : probs_(std::move(probs)) {
    detail::require(probs_.size() >= 1, "belief: empty");
    detail::require(probs_.allFinite() && (probs_.array() >= 0.0).all(), "belief: entries must be finite and >= 0");
    detail::require(std::abs(probs_.sum() - 1.0) <= 1e-9, "belief: entries must sum to 1");
  }
  const Vector& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }

 private:
  Vector probs_;
};

/// L x d matrix of per-token embeddings.
class EmbeddedSequence {
 public:
  explicit EmbeddedSequence(Matrix m) : m_(std::move(m)) {
    detail::require(m_.rows() >= 1, "embedded sequence: length must be >= 1");
    detail::require(m_.allFinite(), "embedded sequence: non-finite entry");
  }
  const Matrix& matrix() const { return m_; }
  Eigen::Index length() const { return m_.rows(); }
  Eigen::Index dimension() const { return m_.cols(); }

 private:
  Matrix m_;
};

struct LossWeights {
  double gamma_seq = kDefaultGammaSeq;
  double gamma_copy = 0.0;

  void validate() const {
    detail::require(std::isfinite(gamma_seq) && gamma_seq >= 0, "loss weights: gamma_seq must be finite and >= 0");
    detail::require(std::isfinite(gamma_copy) && gamma_copy >= 0, "loss weights: gamma_copy must be finite and >= 0");
  }
};

// --- encodings ---------------------------------------------------------------

/// Softmax(logits / tau), max-subtracted.
inline BeliefVector soft_argmax(const Eigen::Ref<const Vector>& logits, double tau = kDefaultTau) {
  detail::require(tau > 0 && std::isfinite(tau), "soft_argmax: tau must be positive");
  detail::require(logits.size() >= 1 && logits.allFinite(), "soft_argmax: logits must be finite and non-empty");
  const Vector scaled = logits / tau;
  Vector e = (scaled.array() - scaled.maxCoeff()).exp().matrix();
  e /= e.sum();
  return BeliefVector(std::move(e));
}

/// Softmax((logits + noise) / tau) with caller-supplied Gumbel noise.
inline BeliefVector gumbel_softmax(const Eigen::Ref<const Vector>& logits, double tau,
                                   std::span<const double> gumbel_noise) {
  detail::require(static_cast<Eigen::Index>(gumbel_noise.size()) == logits.size(),
                  "gumbel_softmax: noise length does not match logits");
  const Vector noise = Eigen::Map<const Vector>(gumbel_noise.data(), logits.size());
  return soft_argmax(logits + noise, tau);
}

/// Draws iid standard Gumbel noise, -log(-log U), from a seeded generator.
inline std::vector<double> gumbel_noise(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xi(n);
  for (double& x : xi) {
    double u = 0.0;
    do u = unif(rng);
    while (u <= 0.0);
    x = -std::log(-std::log(u));
  }
  return xi;
}

inline BeliefVector gumbel_softmax(const Eigen::Ref<const Vector>& logits, double tau, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<double> xi = gumbel_noise(static_cast<std::size_t>(logits.size()), rng);
  return gumbel_softmax(logits, tau, xi);
}

/// Mean word embedding E^T w.
inline Vector embed_belief(const BeliefVector& w, const EmbeddingTable& table) {
  detail::require(w.size() == table.vocab_size(), "embed_belief: belief has length " + std::to_string(w.size()) +
                                                      ", vocabulary has " + std::to_string(table.vocab_size()));
  return table.vectors().transpose() * w.probs();
}

// --- token sequences ---------------------------------------------------------

enum class OovPolicy { skip, unk, error };

inline OovPolicy parse_oov_policy(std::string_view s) {
  if (s == "skip") return OovPolicy::skip;
  if (s == "unk") return OovPolicy::unk;
  if (s == "error") return OovPolicy::error;
  throw InputError("unknown OOV policy '" + std::string(s) + "'");
}

inline std::string_view to_string(OovPolicy p) {
  switch (p) {
    case OovPolicy::skip: return "skip";
    case OovPolicy::unk: return "unk";
    case OovPolicy::error: return "error";
  }
  return "?";
}

/// unk when the table has an UNK row, otherwise skip.
inline OovPolicy default_oov_policy(const EmbeddingTable& table) {
  return table.contains(kUnkToken) ? OovPolicy::unk : OovPolicy::skip;
}

/// Rows of E for the in-vocabulary tokens after applying `policy`; may be empty.
inline std::vector<Eigen::Index> lookup_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                               OovPolicy policy) {
  std::vector<Eigen::Index> rows;
  rows.reserve(tokens.size());
  const std::optional<Eigen::Index> unk = table.find(kUnkToken);
  for (const std::string& tok : tokens) {
    if (auto r = table.find(tok)) {
      rows.push_back(*r);
      continue;
    }
    switch (policy) {
      case OovPolicy::skip: break;
      case OovPolicy::unk:
        if (!unk) throw InputError("embed_tokens: OOV token '" + tok + "' under unk policy, but the table has no UNK row");
        rows.push_back(*unk);
        break;
      case OovPolicy::error: throw InputError("embed_tokens: out-of-vocabulary token '" + tok + "'");
    }
  }
  return rows;
}

inline EmbeddedSequence embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                     OovPolicy policy) {
  detail::require(!tokens.empty(), "embed_tokens: empty sequence");
  const std::vector<Eigen::Index> rows = lookup_tokens(tokens, table, policy);
  detail::require(!rows.empty(), "embed_tokens: no tokens left after OOV handling");
  Matrix m(static_cast<Eigen::Index>(rows.size()), table.dimension());
  for (std::size_t t = 0; t < rows.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = table.vectors().row(rows[t]);
  return EmbeddedSequence(std::move(m));
}

inline EmbeddedSequence embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  return embed_tokens(tokens, table, default_oov_policy(table));
}

// --- losses ------------------------------------------------------------------

struct OtLoss {
  double loss = 0.0;
  TransportPlan plan;
  SolverStatus status = SolverStatus::ok;
  int iterations = 0;
};

/// IPOT distance between two embedded sequences under uniform token weights.
inline OtLoss seq_ot_loss(const EmbeddedSequence& generated, const EmbeddedSequence& reference, CostKind kind,
                          const SolverConfig& cfg = {}) {
  detail::require(generated.dimension() == reference.dimension(),
                  "seq_ot_loss: embedding dimensions differ (" + std::to_string(generated.dimension()) + " vs " +
                      std::to_string(reference.dimension()) + ")");
  const CostMatrix c = build_cost_matrix(generated.matrix(), reference.matrix(), kind);
  SolverReport r = ipot_solve(c, uniform_weights(static_cast<std::size_t>(generated.length())),
                              uniform_weights(static_cast<std::size_t>(reference.length())), cfg);
  if (!r.has_value()) throw SolverFailure("seq_ot_loss: IPOT numerical failure");
  return OtLoss{*r.distance, std::move(*r.plan), r.status, r.iterations_used};
}

/// OT copy loss against the source sequence; same computation as seq_ot_loss.
inline OtLoss copy_ot_loss(const EmbeddedSequence& generated, const EmbeddedSequence& source, CostKind kind,
                           const SolverConfig& cfg = {}) {
  return seq_ot_loss(generated, source, kind, cfg);
}

/// mle + gamma_copy * copy + gamma_seq * seq.
inline double combined_loss(double mle, double seq, double copy, const LossWeights& w) {
  w.validate();
  detail::require(std::isfinite(mle) && std::isfinite(seq) && std::isfinite(copy),
                  "combined_loss: non-finite input");
  return mle + w.gamma_copy * copy + w.gamma_seq * seq;
}

// --- gradients ---------------------------------------------------------------

/// Where the OT gradient stops. The matrix is the same either way; the tag
/// tells a consumer whether to continue backpropagating into the sequence
/// model or to stop at the embedding table.
enum class GradientPath { full, embedding_only };

struct EmbeddingGradient {
  Matrix grad;  // L_g x d
  GradientPath path = GradientPath::full;
  bool nondifferentiable = false;
  double loss = 0.0;
};

/// Envelope gradient of the OT loss w.r.t. the generated embeddings: the
/// optimal plan is held fixed, so row i is sum_j T_ij dc(z_i, z'_j)/dz_i.
inline EmbeddingGradient ot_grad_embeddings(const EmbeddedSequence& generated, const EmbeddedSequence& reference,
                                            CostKind kind, const SolverConfig& cfg = {},
                                            GradientPath path = GradientPath::full) {
  const OtLoss ot = seq_ot_loss(generated, reference, kind, cfg);
  EmbeddingGradient g;
  g.path = path;
  g.loss = ot.loss;
  g.grad = Matrix::Zero(generated.length(), generated.dimension());
  const Matrix& t = ot.plan.matrix();
  for (Eigen::Index i = 0; i < generated.length(); ++i) {
    const Vector x = generated.matrix().row(i).transpose();
    for (Eigen::Index j = 0; j < reference.length(); ++j) {
      if (t(i, j) == 0.0) continue;
      bool nd = false;
      const Vector dc = pair_cost_gradient(kind, x, reference.matrix().row(j).transpose(), &nd);
      g.nondifferentiable = g.nondifferentiable || nd;
      g.grad.row(i) += t(i, j) * dc.transpose();
    }
  }
  return g;
}

/// Soft-argmax embeddings of per-step logits: row t is E^T softmax(logits_t / tau).
inline EmbeddedSequence soft_embed_logits(const Eigen::Ref<const Matrix>& logits, double tau,
                                          const EmbeddingTable& table) {
  detail::require(logits.cols() == table.vocab_size(), "logits: width " + std::to_string(logits.cols()) +
                                                           " does not match vocabulary size " +
                                                           std::to_string(table.vocab_size()));
  Matrix z(logits.rows(), table.dimension());
  for (Eigen::Index t = 0; t < logits.rows(); ++t)
    z.row(t) = embed_belief(soft_argmax(logits.row(t).transpose(), tau), table).transpose();
  return EmbeddedSequence(std::move(z));
}

struct LogitGradient {
  Matrix grad;  // L_g x V
  bool nondifferentiable = false;
  double loss = 0.0;
};

/// Gradient of the OT loss w.r.t. per-step logits through soft-argmax and
/// the mean-embedding map: dL/dv_t = (diag(w) - w w^T) E g_t / tau.
inline LogitGradient ot_grad_logits(const Eigen::Ref<const Matrix>& logits, double tau, const EmbeddingTable& table,
                                    const EmbeddedSequence& reference, CostKind kind, const SolverConfig& cfg = {}) {
  const EmbeddedSequence generated = soft_embed_logits(logits, tau, table);
  const EmbeddingGradient eg = ot_grad_embeddings(generated, reference, kind, cfg);
  LogitGradient out;
  out.loss = eg.loss;
  out.nondifferentiable = eg.nondifferentiable;
  out.grad = Matrix(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector w = soft_argmax(logits.row(t).transpose(), tau).probs();
    const Vector a = table.vectors() * eg.grad.row(t).transpose();
    out.grad.row(t) = (w.cwiseProduct(a) - w * w.dot(a)).transpose() / tau;
  }
  return out;
}

}  // namespace seqot
