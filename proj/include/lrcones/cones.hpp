#pragma once

// The five tangent and normal cones to the variety of rank <= rbar matrices
// at a point X of rank r, in block form: every eta is written as
//
//   eta = [U U_perp] [A B; C D] [V V_perp]^T
//
// with orthonormal frames taken from the SVD of X. Membership and metric
// projection only ever look at the four blocks.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "lrcones/matcore.hpp"
#include "lrcones/variety.hpp"

namespace lrcones {

enum class ConeKind { Tangent, RegularTangent, Normal, RegularNormal, ClarkeNormal };

inline const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::Tangent: return "tangent";
    case ConeKind::RegularTangent: return "regular_tangent";
    case ConeKind::Normal: return "normal";
    case ConeKind::RegularNormal: return "regular_normal";
    case ConeKind::ClarkeNormal: return "clarke_normal";
  }
  return "unknown";
}

inline ConeKind cone_kind_from_string(const std::string& s) {
  // Hyphenated spellings are accepted on the command line.
  std::string key = s;
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "tangent") return ConeKind::Tangent;
  if (key == "regular_tangent") return ConeKind::RegularTangent;
  if (key == "normal") return ConeKind::Normal;
  if (key == "regular_normal") return ConeKind::RegularNormal;
  if (key == "clarke_normal") return ConeKind::ClarkeNormal;
  fail(ErrorCode::InvalidParams, "unknown cone kind '" + s + "'");
}

struct ConeSpec {
  ConeKind kind = ConeKind::Tangent;
  Index rbar = 1;

  friend bool operator==(const ConeSpec&, const ConeSpec&) = default;
};

/// Default tolerance for cone membership decisions.
inline constexpr double kConeTol = 1e-8;

struct ConeFrame {
  Matrix X;
  Index r = 0;
  Matrix U;       // m x r
  Matrix U_perp;  // m x (m - r)
  Matrix V;       // n x r
  Matrix V_perp;  // n x (n - r)
  Vector sigma;   // the r leading singular values

  Index m() const { return X.rows(); }
  Index n() const { return X.cols(); }
};

struct BlockDecomposition {
  Matrix A;  // r x r
  Matrix B;  // r x (n - r)
  Matrix C;  // (m - r) x r
  Matrix D;  // (m - r) x (n - r)
};

inline ConeFrame cone_frame(const Matrix& X, double tol = kRankTol) {
  require_finite(X, "cone_frame");
  const FullSvd f = full_svd(X);
  ConeFrame fr;
  fr.X = X;
  fr.r = count_rank(f.sigma, tol);
  fr.U = f.U.leftCols(fr.r);
  fr.U_perp = f.U.rightCols(X.rows() - fr.r);
  fr.V = f.V.leftCols(fr.r);
  fr.V_perp = f.V.rightCols(X.cols() - fr.r);
  fr.sigma = f.sigma.head(fr.r);
  return fr;
}

/// Frame with caller-supplied orthonormal bases (used to check that verdicts
/// do not depend on the choice of U_perp, V_perp).
inline ConeFrame with_complements(ConeFrame frame, const Matrix& U_perp, const Matrix& V_perp) {
  if (U_perp.rows() != frame.m() || U_perp.cols() != frame.U_perp.cols() ||
      V_perp.rows() != frame.n() || V_perp.cols() != frame.V_perp.cols())
    fail(ErrorCode::InvalidInput, "with_complements: shape mismatch");
  frame.U_perp = U_perp;
  frame.V_perp = V_perp;
  return frame;
}

inline BlockDecomposition decompose(const ConeFrame& frame, const Matrix& eta) {
  if (eta.rows() != frame.m() || eta.cols() != frame.n())
    fail(ErrorCode::InvalidInput, "decompose: eta has shape " + std::to_string(eta.rows()) + "x" +
                                      std::to_string(eta.cols()) + ", expected " +
                                      std::to_string(frame.m()) + "x" + std::to_string(frame.n()));
  require_finite(eta, "decompose");
  const Matrix left = frame.U.transpose() * eta;
  const Matrix left_perp = frame.U_perp.transpose() * eta;
  return {left * frame.V, left * frame.V_perp, left_perp * frame.V, left_perp * frame.V_perp};
}

inline Matrix reassemble(const ConeFrame& frame, const BlockDecomposition& b) {
  return frame.U * b.A * frame.V.transpose() + frame.U * b.B * frame.V_perp.transpose() +
         frame.U_perp * b.C * frame.V.transpose() + frame.U_perp * b.D * frame.V_perp.transpose();
}

namespace detail {

inline void require_cone_applicable(const ConeFrame& frame, const ConeSpec& spec) {
  const Index mn = std::min(frame.m(), frame.n());
  if (spec.rbar < 1 || spec.rbar >= mn)
    fail(ErrorCode::InvalidParams, "require 1 <= rbar < min(m,n), got rbar = " +
                                       std::to_string(spec.rbar));
  if (frame.r > spec.rbar)
    fail(ErrorCode::RankExceedsVariety, "require r <= rbar, got r = " + std::to_string(frame.r) +
                                            " and rbar = " + std::to_string(spec.rbar));
}

/// Rank budget of the D block, or nullopt when D must vanish entirely
/// together with A, B, C (regular normal cone off the smooth part).
inline Index d_budget(const ConeFrame& frame, const ConeSpec& spec) {
  const Index mn = std::min(frame.m(), frame.n());
  switch (spec.kind) {
    case ConeKind::Tangent: return spec.rbar - frame.r;
    case ConeKind::RegularTangent: return 0;
    case ConeKind::Normal: return mn - spec.rbar;
    case ConeKind::RegularNormal: return frame.r < spec.rbar ? 0 : mn - frame.r;
    case ConeKind::ClarkeNormal: return mn - frame.r;
  }
  return 0;
}

inline bool keeps_abc(const ConeSpec& spec) {
  return spec.kind == ConeKind::Tangent || spec.kind == ConeKind::RegularTangent;
}

inline Matrix truncate_block(const Matrix& D, Index budget) {
  if (D.size() == 0) return D;
  if (budget <= 0) return Matrix::Zero(D.rows(), D.cols());
  if (budget >= std::min(D.rows(), D.cols())) return D;
  return truncate_rank(D, budget);
}

inline double block_tail_norm(const Matrix& D, Index budget) {
  if (D.size() == 0) return 0.0;
  if (budget <= 0) return D.norm();
  if (budget >= std::min(D.rows(), D.cols())) return 0.0;
  return distance_to_variety(D, budget);
}

}  // namespace detail

/// Rank of the D block: singular values count when they exceed both the
/// relative threshold (against sigma_1(D)) and tol * max(1, ||eta||).
inline Index block_rank(const Matrix& D, double eta_norm, double tol = kConeTol) {
  if (D.size() == 0) return 0;
  return count_rank(svd(D).sigma, kRankTol, tol * std::max(1.0, eta_norm));
}

inline bool cone_membership(const ConeFrame& frame, const ConeSpec& spec, const Matrix& eta,
                            double tol = kConeTol) {
  detail::require_cone_applicable(frame, spec);
  const BlockDecomposition b = decompose(frame, eta);
  const double eta_norm = eta.norm();
  const double small = tol * std::max(1.0, eta_norm);
  const double abc = std::sqrt(b.A.squaredNorm() + b.B.squaredNorm() + b.C.squaredNorm());
  const Index mn = std::min(frame.m(), frame.n());

  switch (spec.kind) {
    case ConeKind::Tangent:
      return block_rank(b.D, eta_norm, tol) <= spec.rbar - frame.r;
    case ConeKind::RegularTangent:
      return b.D.norm() <= small;
    case ConeKind::Normal:
      return abc <= small && block_rank(b.D, eta_norm, tol) <= mn - spec.rbar;
    case ConeKind::RegularNormal:
      if (frame.r < spec.rbar) return eta_norm <= tol;
      return abc <= small;
    case ConeKind::ClarkeNormal:
      return abc <= small;
  }
  return false;
}

/// Metric projection onto the cone. The decomposition into A,B,C and D is
/// orthogonal, so the projection keeps or zeroes A,B,C and Eckart-Young
/// truncates D to the cone's rank budget.
inline Matrix project_cone(const ConeFrame& frame, const ConeSpec& spec, const Matrix& eta) {
  detail::require_cone_applicable(frame, spec);
  if (spec.kind == ConeKind::RegularNormal && frame.r < spec.rbar)
    return Matrix::Zero(frame.m(), frame.n());
  BlockDecomposition b = decompose(frame, eta);
  if (!detail::keeps_abc(spec)) {
    b.A.setZero();
    b.B.setZero();
    b.C.setZero();
  }
  b.D = detail::truncate_block(b.D, detail::d_budget(frame, spec));
  return reassemble(frame, b);
}

/// ||eta - project_cone(eta)||, evaluated from the blocks without
/// reassembling.
inline double cone_distance(const ConeFrame& frame, const ConeSpec& spec, const Matrix& eta) {
  detail::require_cone_applicable(frame, spec);
  if (spec.kind == ConeKind::RegularNormal && frame.r < spec.rbar) {
    require_finite(eta, "cone_distance");
    return eta.norm();
  }
  const BlockDecomposition b = decompose(frame, eta);
  const double abc_sq =
      detail::keeps_abc(spec) ? 0.0 : b.A.squaredNorm() + b.B.squaredNorm() + b.C.squaredNorm();
  const double tail = detail::block_tail_norm(b.D, detail::d_budget(frame, spec));
  return std::sqrt(abc_sq + tail * tail);
}

/// <eta, nu> <= 1e-8 ||eta|| ||nu|| for eta in the primal cone polar to nu's
/// kind: RegularTangent against ClarkeNormal (and Normal, which it contains),
/// Tangent against RegularNormal.
inline bool polar_pairing_check(const ConeFrame& frame, Index rbar, const Matrix& eta,
                                const ConeSpec& nu_spec, const Matrix& nu,
                                double tol = kConeTol) {
  ConeSpec primal{ConeKind::Tangent, rbar};
  switch (nu_spec.kind) {
    case ConeKind::RegularNormal: primal.kind = ConeKind::Tangent; break;
    case ConeKind::ClarkeNormal:
    case ConeKind::Normal: primal.kind = ConeKind::RegularTangent; break;
    default:
      fail(ErrorCode::InvalidInput, "polar_pairing_check: nu must be a normal-cone kind");
  }
  if (nu_spec.rbar != rbar)
    fail(ErrorCode::InvalidInput, "polar_pairing_check: rbar mismatch between eta and nu");
  if (!cone_membership(frame, primal, eta, tol))
    fail(ErrorCode::NotInCone, std::string("polar_pairing_check: eta is not in the ") +
                                   to_string(primal.kind) + " cone");
  if (!cone_membership(frame, nu_spec, nu, tol))
    fail(ErrorCode::NotInCone, std::string("polar_pairing_check: nu is not in the ") +
                                   to_string(nu_spec.kind) + " cone");
  const double pairing = (eta.array() * nu.array()).sum();
  return pairing <= 1e-8 * eta.norm() * nu.norm();
}

/// Random member of the cone at `frame`: Gaussian blocks, D truncated to the
/// budget. `d_rank` overrides the D rank (clamped to the budget) when set.
inline Matrix sample_cone_member(const ConeFrame& frame, const ConeSpec& spec, RandomSource& rng,
                                 std::optional<Index> d_rank = std::nullopt) {
  detail::require_cone_applicable(frame, spec);
  if (spec.kind == ConeKind::RegularNormal && frame.r < spec.rbar)
    return Matrix::Zero(frame.m(), frame.n());
  const Index r = frame.r;
  const Index p = frame.m() - r;
  const Index q = frame.n() - r;
  BlockDecomposition b{Matrix::Zero(r, r), Matrix::Zero(r, q), Matrix::Zero(p, r),
                       Matrix::Zero(p, q)};
  if (detail::keeps_abc(spec)) {
    b.A = rng.gaussian_matrix(r, r);
    b.B = rng.gaussian_matrix(r, q);
    b.C = rng.gaussian_matrix(p, r);
  }
  Index k = std::min(detail::d_budget(frame, spec), std::min(p, q));
  if (d_rank) k = std::min(k, *d_rank);
  if (k > 0) b.D = rng.gaussian_matrix(p, k) * rng.gaussian_matrix(k, q);
  return reassemble(frame, b);
}

}  // namespace lrcones
