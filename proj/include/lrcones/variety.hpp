#pragma once

// Point-set operations on the determinantal variety of m x n matrices of
// rank at most r.

#include <algorithm>
#include <cmath>
#include <string>

#include "lrcones/matcore.hpp"

namespace lrcones {

struct VarietyParams {
  Index m = 1;
  Index n = 1;
  Index r = 0;

  void validate() const {
    if (m < 1 || n < 1) fail(ErrorCode::InvalidParams, "require m, n >= 1");
    if (r < 0 || r > std::min(m, n)) fail(ErrorCode::InvalidRank, "require r <= min(m,n)");
  }
};

inline Index numerical_rank(const Matrix& X, double tol = kRankTol) {
  if (X.size() == 0) return 0;
  return count_rank(svd(X).sigma, tol);
}

namespace detail {
inline void require_rank_in_range(const Matrix& X, Index r, const char* what) {
  if (r < 0 || r > std::min(X.rows(), X.cols()))
    fail(ErrorCode::InvalidRank, std::string(what) + ": require 0 <= r <= min(m,n), got r = " +
                                     std::to_string(r));
}
}  // namespace detail

/// sqrt(sum_{i>r} sigma_i^2): distance to matrices of rank <= r (equivalently
/// to the rank-r stratum, whose closure is the variety).
inline double distance_to_variety(const Matrix& X, Index r) {
  detail::require_rank_in_range(X, r, "distance_to_variety");
  const SvdFactors f = svd(X);
  double acc = 0.0;
  for (Index i = r; i < f.k(); ++i) acc += f.sigma(i) * f.sigma(i);
  return std::sqrt(acc);
}

/// Trailing singular values past index r (the ones removed by truncation).
inline Vector trailing_singular_values(const Matrix& X, Index r) {
  detail::require_rank_in_range(X, r, "trailing_singular_values");
  const SvdFactors f = svd(X);
  return f.sigma.tail(f.k() - r);
}

/// Best Frobenius approximation of rank <= r (truncated SVD). When
/// sigma_r == sigma_{r+1} the minimizer is not unique; this returns the one
/// selected by the SVD's ordering and sign convention.
inline Matrix truncate_rank(const Matrix& X, Index r) {
  detail::require_rank_in_range(X, r, "truncate_rank");
  const SvdFactors f = svd(X);
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  for (Index i = 0; i < r; ++i) out.noalias() += f.sigma(i) * f.U.col(i) * f.V.col(i).transpose();
  return out;
}

inline bool is_member(const Matrix& X, Index r, double tol = kRankTol) {
  return numerical_rank(X, tol) <= r;
}

}  // namespace lrcones
