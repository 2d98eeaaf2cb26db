// Pointwise costs between embedding vectors and cost-matrix assembly.
#pragma once

#include "seqot/core.hpp"

#include <algorithm>
#include <cmath>

namespace seqot {

struct PairCost {
  double value = 0.0;
  bool zero_norm = false;
};

namespace detail {

inline void require_same_dim(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "cost: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
}

}  // namespace detail

/// 1 - cos(x, y), clamped to [0, 2]. A zero-norm argument yields 1.0 and sets the flag.
inline PairCost cosine_cost_checked(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  detail::require_same_dim(x, y);
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return {1.0, true};
  const double c = 1.0 - x.dot(y) / (nx * ny);
  return {std::clamp(c, 0.0, 2.0), false};
}

inline double cosine_cost(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  return cosine_cost_checked(x, y).value;
}

inline double squared_euclidean_cost(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  detail::require_same_dim(x, y);
  return (x - y).squaredNorm();
}

inline double euclidean_cost(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  detail::require_same_dim(x, y);
  return (x - y).norm();
}

inline PairCost pair_cost(CostKind kind, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  switch (kind) {
    case CostKind::cosine: return cosine_cost_checked(x, y);
    case CostKind::euclidean: return {euclidean_cost(x, y), false};
    case CostKind::squared_euclidean: return {squared_euclidean_cost(x, y), false};
  }
  return {};
}

/// Gradient of c(x, y) with respect to x. Returns zero at points where the
/// cost is not differentiable (zero-norm x or y for cosine, x == y for
/// euclidean); `nondifferentiable` is set in that case.
inline Vector pair_cost_gradient(CostKind kind, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& y, bool* nondifferentiable = nullptr) {
  detail::require_same_dim(x, y);
  auto flag = [&] {
    if (nondifferentiable) *nondifferentiable = true;
    return Vector::Zero(x.size()).eval();
  };
  switch (kind) {
    case CostKind::squared_euclidean:
      return 2.0 * (x - y);
    case CostKind::euclidean: {
      const double d = (x - y).norm();
      if (d == 0.0) return flag();
      return (x - y) / d;
    }
    case CostKind::cosine: {
      const double nx = x.norm();
      const double ny = y.norm();
      if (nx == 0.0 || ny == 0.0) return flag();
      // d/dx [1 - x.y / (|x||y|)] = -(y / (|x||y|) - (x.y) x / (|x|^3 |y|))
      return -(y / (nx * ny) - (x.dot(y) / (nx * nx * nx * ny)) * x);
    }
  }
  return flag();
}

/// C_ij = c(S_i, S'_j) for row-wise embedded sequences.
inline CostMatrix build_cost_matrix(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& s_prime,
                                    CostKind kind) {
  detail::require(s.rows() >= 1 && s_prime.rows() >= 1, "build_cost_matrix: empty sequence");
  detail::require(s.cols() == s_prime.cols(), "build_cost_matrix: dimension mismatch (" +
                                                  std::to_string(s.cols()) + " vs " +
                                                  std::to_string(s_prime.cols()) + ")");
  detail::require(s.allFinite() && s_prime.allFinite(), "build_cost_matrix: non-finite input");

  Matrix c(s.rows(), s_prime.rows());
  bool zero_norm = false;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Vector x = s.row(i).transpose();
    for (Eigen::Index j = 0; j < s_prime.rows(); ++j) {
      const PairCost pc = pair_cost(kind, x, s_prime.row(j).transpose());
      c(i, j) = pc.value;
      zero_norm = zero_norm || pc.zero_norm;
    }
  }
  return CostMatrix(std::move(c), kind, zero_norm);
}

}  // namespace seqot
