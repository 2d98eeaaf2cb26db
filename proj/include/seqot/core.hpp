// Shared domain types for discrete optimal transport.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seqot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for malformed user input (shapes, weights, files, flags).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kWeightSumTolerance = 1e-6;
inline constexpr double kFeasibilityTolerance = 1e-6;

namespace detail {

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline void require(bool cond, std::string_view what) {
  if (!cond) throw InputError(std::string(what));
}

// Checks that `w` is a probability vector and renormalizes it in place.
inline void normalize_simplex(Vector& w, std::string_view name) {
  require(w.size() >= 1, std::string(name) + ": empty weight vector");
  require(w.allFinite(), std::string(name) + ": non-finite weight");
  require((w.array() >= 0.0).all(), std::string(name) + ": negative weight");
  const double sum = w.sum();
  require(std::abs(sum - 1.0) <= kWeightSumTolerance,
          std::string(name) + ": weights sum to " + std::to_string(sum) + ", expected 1");
  w /= sum;
}

}  // namespace detail

/// Uniform probability vector of length n.
inline Vector uniform_weights(std::size_t n) {
  detail::require(n >= 1, "uniform_weights: n must be positive");
  return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

/// Weighted point cloud: one point per row, weights on the simplex.
class DiscreteDistribution {
 public:
  DiscreteDistribution(Matrix points, Vector weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    detail::require(points_.rows() >= 1, "distribution: empty support");
    detail::require(points_.cols() >= 1, "distribution: points must have dimension >= 1");
    detail::require(points_.rows() == weights_.size(),
                    "distribution: dimension mismatch between points (" +
                        std::to_string(points_.rows()) + ") and weights (" +
                        std::to_string(weights_.size()) + ")");
    detail::require(points_.allFinite(), "distribution: non-finite coordinate");
    detail::normalize_simplex(weights_, "distribution");
  }

  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dimension() const { return points_.cols(); }

 private:
  Matrix points_;
  Vector weights_;
};

inline DiscreteDistribution validate_distribution(Matrix points, Vector weights) {
  return DiscreteDistribution(std::move(points), std::move(weights));
}

enum class CostKind { cosine, euclidean, squared_euclidean };

inline std::string_view to_string(CostKind k) {
  switch (k) {
    case CostKind::cosine: return "cosine";
    case CostKind::euclidean: return "euclidean";
    case CostKind::squared_euclidean: return "squared_euclidean";
  }
  return "?";
}

inline CostKind parse_cost_kind(std::string_view s) {
  if (s == "cosine") return CostKind::cosine;
  if (s == "euclidean") return CostKind::euclidean;
  if (s == "squared_euclidean" || s == "sqeuclidean") return CostKind::squared_euclidean;
  throw InputError("unknown cost kind '" + std::string(s) + "'");
}

/// Pairwise transport costs, tagged with the cost function that produced them.
class CostMatrix {
 public:
  CostMatrix(Matrix values, CostKind kind, bool zero_norm_warning = false)
      : values_(std::move(values)), kind_(kind), zero_norm_warning_(zero_norm_warning) {
    detail::require(values_.rows() >= 1 && values_.cols() >= 1, "cost matrix: empty");
    detail::require(values_.allFinite(), "cost matrix: non-finite entry");
    detail::require((values_.array() >= 0.0).all(), "cost matrix: negative entry");
    if (kind_ == CostKind::cosine)
      detail::require((values_.array() <= 2.0).all(), "cost matrix: cosine entry above 2");
  }

  const Matrix& values() const { return values_; }
  CostKind kind() const { return kind_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  /// Set when some cosine entry fell back to 1.0 because of a zero-norm vector.
  bool zero_norm_warning() const { return zero_norm_warning_; }

  CostMatrix transposed() const { return CostMatrix(values_.transpose(), kind_, zero_norm_warning_); }

 private:
  Matrix values_;
  CostKind kind_;
  bool zero_norm_warning_;
};

/// A coupling together with the marginals it is meant to satisfy.
class TransportPlan {
 public:
  TransportPlan(Matrix matrix, Vector row_marginal, Vector col_marginal)
      : matrix_(std::move(matrix)),
        row_marginal_(std::move(row_marginal)),
        col_marginal_(std::move(col_marginal)) {
    detail::require(matrix_.rows() == row_marginal_.size() && matrix_.cols() == col_marginal_.size(),
                    "transport plan: marginal shape mismatch");
    detail::require(matrix_.allFinite(), "transport plan: non-finite entry");
    detail::require((matrix_.array() >= -1e-12).all(), "transport plan: negative entry");
    matrix_ = matrix_.cwiseMax(0.0);
  }

  const Matrix& matrix() const { return matrix_; }
  const Vector& row_marginal() const { return row_marginal_; }
  const Vector& col_marginal() const { return col_marginal_; }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }

 private:
  Matrix matrix_;
  Vector row_marginal_;
  Vector col_marginal_;
};

/// ∞-norm of the marginal violation of a plan.
inline double plan_residual(const TransportPlan& plan) {
  const Vector row_err = plan.matrix().rowwise().sum() - plan.row_marginal();
  const Vector col_err = plan.matrix().colwise().sum().transpose() - plan.col_marginal();
  return std::max(row_err.cwiseAbs().maxCoeff(), col_err.cwiseAbs().maxCoeff());
}

struct SolverConfig {
  double beta = 0.5;       // proximal weight, 1/beta is the generalized stepsize
  int outer_iters = 2000;
  int inner_k = 1;
  double epsilon = 10.0;   // Sinkhorn: larger means weaker entropy regularization
  double tolerance = 1e-9; // Frobenius norm of the plan change between iterations

  void validate() const {
    detail::require(beta > 0 && std::isfinite(beta), "solver config: beta must be positive");
    detail::require(epsilon > 0 && std::isfinite(epsilon), "solver config: epsilon must be positive");
    detail::require(tolerance > 0, "solver config: tolerance must be positive");
    detail::require(outer_iters >= 1, "solver config: outer_iters must be >= 1");
    detail::require(inner_k >= 1, "solver config: inner_k must be >= 1");
  }
};

enum class SolverStatus { ok, max_iters, numerical_failure };

inline std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::ok: return "ok";
    case SolverStatus::max_iters: return "max_iters";
    case SolverStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

/// Solver output. On numerical_failure the distance and plan are withheld.
struct SolverReport {
  std::optional<double> distance;
  std::optional<TransportPlan> plan;
  int iterations_used = 0;
  bool converged = false;
  double marginal_residual = 0.0;
  SolverStatus status = SolverStatus::numerical_failure;

  bool has_value() const { return status != SolverStatus::numerical_failure; }
};

/// Frobenius inner product <T, C>.
inline double frobenius_dot(const Matrix& t, const Matrix& c) {
  return (t.array() * c.array()).sum();
}

}  // namespace seqot
