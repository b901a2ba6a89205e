#pragma once

// Ranks of 2x2 block matrices [A B; C D] with A k x k, B k x q, C p x k and
// D p x q: the bound k + min(k+s, p, q) when rank D <= s, the matrices that
// attain it, and the orthogonal change of bases that pushes a matrix of rank
// <= 2k+s into a form whose lower-right block has small rank.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lrcones/matcore.hpp"
#include "lrcones/variety.hpp"

namespace lrcones {

struct BlockShape {
  Index k = 1;
  Index p = 1;
  Index q = 1;
  Index s = 0;

  Index rows() const { return k + p; }
  Index cols() const { return k + q; }

  void validate() const {
    if (k < 1 || p < 1 || q < 1)
      fail(ErrorCode::InvalidParams, "block shape: require k, p, q >= 1");
    if (s < 0 || s > std::min(p, q))
      fail(ErrorCode::InvalidParams, "block shape: require 0 <= s <= min(p,q), got s = " +
                                         std::to_string(s));
  }
};

inline Index rank_bound(const BlockShape& shape) {
  shape.validate();
  return shape.k + std::min({shape.k + shape.s, shape.p, shape.q});
}

inline Matrix assemble_blocks(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D) {
  if (A.rows() != B.rows() || C.rows() != D.rows() || A.cols() != C.cols() ||
      B.cols() != D.cols())
    fail(ErrorCode::InvalidInput, "assemble_blocks: inconsistent block shapes");
  Matrix M(A.rows() + C.rows(), A.cols() + B.cols());
  M << A, B, C, D;
  return M;
}

/// Lower-right block of M after the leading k rows and columns.
inline Matrix corner_block(const Matrix& M, Index k) {
  return M.bottomRightCorner(M.rows() - k, M.cols() - k);
}

/// Exact rank of an integer-valued matrix by integer row elimination with
/// gcd normalization. Throws InvalidInput if an entry is not an integer.
inline Index exact_integer_rank(const Matrix& M) {
  const Index rows = M.rows();
  const Index cols = M.cols();
  std::vector<std::vector<std::int64_t>> a(rows, std::vector<std::int64_t>(cols));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double v = M(i, j);
      if (v != std::round(v) || std::abs(v) > 1e6)
        fail(ErrorCode::InvalidInput, "exact_integer_rank: entries must be small integers");
      a[i][j] = static_cast<std::int64_t>(v);
    }
  Index rank = 0;
  for (Index col = 0; col < cols && rank < rows; ++col) {
    Index pivot = rank;
    while (pivot < rows && a[pivot][col] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(a[pivot], a[rank]);
    for (Index i = rank + 1; i < rows; ++i) {
      if (a[i][col] == 0) continue;
      const std::int64_t lead = a[rank][col];
      const std::int64_t factor = a[i][col];
      std::int64_t g = 0;
      for (Index j = 0; j < cols; ++j) {
        a[i][j] = lead * a[i][j] - factor * a[rank][j];
        g = std::gcd(g, a[i][j] < 0 ? -a[i][j] : a[i][j]);
      }
      if (g > 1)
        for (Index j = 0; j < cols; ++j) a[i][j] /= g;
    }
    ++rank;
  }
  return rank;
}

/// diag(J_{k + min(k, min(p,q) - s)}, J_s, 0): total rank equals
/// rank_bound(shape) while the D block has rank s.
inline Matrix tight_witness(const BlockShape& shape) {
  shape.validate();
  const Index lead = shape.k + std::min(shape.k, std::min(shape.p, shape.q) - shape.s);
  Matrix W = Matrix::Zero(shape.rows(), shape.cols());
  W.topLeftCorner(lead, lead) = reversal(lead);
  W.block(lead, lead, shape.s, shape.s) = reversal(shape.s);
  return W;
}

struct CornerRotation {
  Matrix U;       // (k+p) x (k+p) orthogonal
  Matrix V;       // (k+q) x (k+q) orthogonal
  Matrix Mprime;  // M = U * Mprime * V^T
};

/// From the SVD M = [U~ U_perp] diag(Sigma, 0) [V~ V_perp]^T take
/// Mprime = diag(J_r Sigma, 0), U = [U~ J_r, U_perp], V = [V~ V_perp].
/// The anti-diagonal J_r Sigma meets the lower-right block in at most
/// max(r - 2k, 0) entries, which is the rank budget of D'.
inline CornerRotation rotate_to_low_rank_corner(const Matrix& M, Index k, Index s,
                                                double tol = kRankTol) {
  require_finite(M, "rotate_to_low_rank_corner");
  if (k < 1 || M.rows() <= k || M.cols() <= k)
    fail(ErrorCode::InvalidParams, "rotate_to_low_rank_corner: require 1 <= k < min(rows, cols)");
  const Index p = M.rows() - k;
  const Index q = M.cols() - k;
  if (s < 0 || s > std::min(p, q))
    fail(ErrorCode::InvalidParams, "rotate_to_low_rank_corner: require 0 <= s <= min(p,q)");
  const FullSvd f = full_svd(M);
  const Index r = count_rank(f.sigma, tol);
  if (r > 2 * k + s)
    fail(ErrorCode::RankTooHigh, "rotate_to_low_rank_corner: rank " + std::to_string(r) +
                                     " exceeds 2k+s = " + std::to_string(2 * k + s));
  CornerRotation out;
  out.U = f.U;
  out.U.leftCols(r) = f.U.leftCols(r) * reversal(r);
  out.V = f.V;
  out.Mprime = Matrix::Zero(M.rows(), M.cols());
  out.Mprime.topLeftCorner(r, r) = reversal(r) * f.sigma.head(r).asDiagonal();
  return out;
}

/// The D' rank budget min(s, max(min(p,q) - k, 0)).
inline Index corner_rank_budget(Index k, Index p, Index q, Index s) {
  return std::min(s, std::max(std::min(p, q) - k, Index{0}));
}

}  // namespace lrcones
