#pragma once

// Dense real matrix kernel: SVD with a fixed sign convention, pseudoinverse,
// orthonormal complements, Haar sampling on O(n), reversal matrices and the
// plain-text matrix format shared by every tool in the project.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lrcones/errors.hpp"

namespace lrcones {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative threshold below which a singular value does not count toward rank.
inline constexpr double kRankTol = 1e-9;
/// Threshold used in place of the relative one when sigma_1 == 0.
inline constexpr double kRankAbsFloor = 1e-12;

struct SvdFactors {
  Matrix U;      // rows x k, column-orthonormal
  Vector sigma;  // k values, nonincreasing, nonnegative
  Matrix V;      // cols x k, column-orthonormal

  Index k() const { return sigma.size(); }
};

/// Full SVD: U is rows x rows and V is cols x cols; sigma has min(rows, cols)
/// entries. Trailing columns of U and V span the orthogonal complements of
/// the leading ones.
struct FullSvd {
  Matrix U;
  Vector sigma;
  Matrix V;
};

/// Deterministic pseudo-random source. The engine is std::mt19937_64, the
/// Gaussian draws use std::normal_distribution, so streams are bit-identical
/// for a given seed on a given standard library.
class RandomSource {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  Matrix gaussian_matrix(Index rows, Index cols) {
    Matrix out(rows, cols);
    // Fill in row-major order so the draw order matches the text format.
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) out(i, j) = gaussian();
    return out;
  }

  /// Independent stream keyed by (seed, stream); does not advance *this.
  RandomSource derive(std::uint64_t stream) const {
    return RandomSource(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL)));
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline bool all_finite(const Matrix& A) { return A.allFinite(); }

inline void require_finite(const Matrix& A, const char* what) {
  if (!A.allFinite())
    fail(ErrorCode::InvalidInput, std::string(what) + ": matrix has non-finite entries");
}

/// Count of sigma_i above max(rel_tol * sigma_1, abs_floor); when sigma_1 is
/// zero the absolute floor kRankAbsFloor applies.
inline Index count_rank(const Vector& sigma, double rel_tol = kRankTol,
                        double abs_floor = 0.0) {
  if (sigma.size() == 0) return 0;
  const double s1 = sigma.maxCoeff();
  double threshold = s1 > 0.0 ? rel_tol * s1 : kRankAbsFloor;
  threshold = std::max(threshold, abs_floor);
  Index r = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > threshold) ++r;
  return r;
}

namespace detail {

// Largest-magnitude entry of each U column made positive (first one on ties);
// the matching V column flips with it.
inline void fix_signs(Matrix& U, Matrix& V, Index ncols) {
  for (Index j = 0; j < ncols; ++j) {
    if (U.rows() == 0) break;
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      if (j < V.cols()) V.col(j) *= -1.0;
    }
  }
}

inline void fix_column_signs(Matrix& W) {
  Matrix dummy(0, 0);
  fix_signs(W, dummy, W.cols());
}

}  // namespace detail

/// Thin SVD via one-sided-preconditioned Jacobi (Eigen::JacobiSVD).
inline SvdFactors svd(const Matrix& A) {
  require_finite(A, "svd");
  const Index k = std::min(A.rows(), A.cols());
  SvdFactors f;
  if (k == 0) {
    f.U = Matrix(A.rows(), 0);
    f.V = Matrix(A.cols(), 0);
    f.sigma = Vector(0);
    return f;
  }
  Eigen::JacobiSVD<Matrix> jac(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  f.U = jac.matrixU();
  f.V = jac.matrixV();
  f.sigma = jac.singularValues();
  detail::fix_signs(f.U, f.V, k);
  return f;
}

inline FullSvd full_svd(const Matrix& A) {
  require_finite(A, "full_svd");
  FullSvd f;
  const Index k = std::min(A.rows(), A.cols());
  if (k == 0) {
    f.U = Matrix::Identity(A.rows(), A.rows());
    f.V = Matrix::Identity(A.cols(), A.cols());
    f.sigma = Vector(0);
    return f;
  }
  Eigen::JacobiSVD<Matrix> jac(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  f.U = jac.matrixU();
  f.V = jac.matrixV();
  f.sigma = jac.singularValues();
  detail::fix_signs(f.U, f.V, k);
  // Complement columns carry no sigma; give them the same sign rule.
  for (Index j = k; j < f.U.cols(); ++j) {
    Matrix col = f.U.col(j);
    detail::fix_column_signs(col);
    f.U.col(j) = col;
  }
  for (Index j = k; j < f.V.cols(); ++j) {
    Matrix col = f.V.col(j);
    detail::fix_column_signs(col);
    f.V.col(j) = col;
  }
  return f;
}

inline double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  const SvdFactors f = svd(A);
  return f.sigma.size() ? f.sigma(0) : 0.0;
}

/// Moore-Penrose pseudoinverse; singular values at or below the rank
/// threshold are treated as zero.
inline Matrix pinv(const Matrix& A, double rel_tol = kRankTol) {
  const SvdFactors f = svd(A);
  const Index r = count_rank(f.sigma, rel_tol);
  Matrix out = Matrix::Zero(A.cols(), A.rows());
  for (Index i = 0; i < r; ++i)
    out.noalias() += (f.V.col(i) / f.sigma(i)) * f.U.col(i).transpose();
  return out;
}

/// ||W^T W - I||_F
inline double orthonormality_residual(const Matrix& W) {
  return (W.transpose() * W - Matrix::Identity(W.cols(), W.cols())).norm();
}

/// Column-orthonormal basis of (im U)^perp. U must be column-orthonormal.
inline Matrix orth_complement(const Matrix& U, double orth_tol = 1e-8) {
  require_finite(U, "orth_complement");
  const Index n = U.rows();
  const Index p = U.cols();
  if (p > n) fail(ErrorCode::InvalidInput, "orth_complement: more columns than rows");
  if (orthonormality_residual(U) > orth_tol)
    fail(ErrorCode::InvalidInput, "orth_complement: input is not column-orthonormal");
  if (p == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(U);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix W = Q.rightCols(n - p);
  // One re-orthogonalization pass against U keeps U^T W at roundoff level.
  W -= U * (U.transpose() * W);
  Eigen::HouseholderQR<Matrix> qr2(W);
  W = qr2.householderQ() * Matrix::Identity(n, n - p);
  detail::fix_column_signs(W);
  return W;
}

/// Haar-distributed element of O(n): QR of a Gaussian matrix with the
/// diagonal of R made positive.
inline Matrix haar_orthogonal(Index n, RandomSource& rng) {
  if (n < 1) fail(ErrorCode::InvalidInput, "haar_orthogonal: n must be positive");
  const Matrix G = rng.gaussian_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

/// Random element of St(p, n) (first p columns of a Haar orthogonal matrix).
inline Matrix random_stiefel(Index n, Index p, RandomSource& rng) {
  if (p == 0) return Matrix(n, 0);
  return haar_orthogonal(n, rng).leftCols(p);
}

/// l x l anti-identity.
inline Matrix reversal(Index l) {
  Matrix J = Matrix::Zero(l, l);
  for (Index i = 0; i < l; ++i) J(i, l - 1 - i) = 1.0;
  return J;
}

/// Orthogonal projector onto im A computed from the SVD (A A^dagger).
inline Matrix range_projector(const Matrix& A, double rel_tol = kRankTol) {
  const SvdFactors f = svd(A);
  const Index r = count_rank(f.sigma, rel_tol);
  const Matrix Ur = f.U.leftCols(r);
  return Ur * Ur.transpose();
}

/// Column-orthonormal basis of im A (first rank-many left singular vectors).
inline Matrix range_basis(const Matrix& A, double rel_tol = kRankTol) {
  const SvdFactors f = svd(A);
  return f.U.leftCols(count_rank(f.sigma, rel_tol));
}

// ---------------------------------------------------------------------------
// Matrix text format: "rows cols" then one line per row, 17 significant digits.

inline void write_matrix(std::ostream& os, const Matrix& A) {
  os << A.rows() << ' ' << A.cols() << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (Index i = 0; i < A.rows(); ++i) {
    line.str("");
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) line << ' ';
      line << A(i, j);
    }
    os << line.str() << '\n';
  }
}

inline std::string format_matrix(const Matrix& A) {
  std::ostringstream os;
  write_matrix(os, A);
  return os.str();
}

inline Matrix read_matrix(std::istream& is) {
  long long rows = -1;
  long long cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0)
    fail(ErrorCode::InvalidInput, "matrix text: bad header, expected \"rows cols\"");
  Matrix A(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) {
      std::string token;
      if (!(is >> token))
        fail(ErrorCode::InvalidInput, "matrix text: expected " +
                                          std::to_string(rows * cols) + " entries");
      try {
        std::size_t used = 0;
        A(i, j) = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        fail(ErrorCode::InvalidInput, "matrix text: bad entry '" + token + "'");
      }
    }
  }
  std::string extra;
  if (is >> extra) fail(ErrorCode::InvalidInput, "matrix text: trailing data '" + extra + "'");
  require_finite(A, "matrix text");
  return A;
}

inline Matrix parse_matrix(const std::string& text) {
  std::istringstream is(text);
  return read_matrix(is);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open matrix file '" + path + "'");
  return read_matrix(in);
}

inline void save_matrix(const std::string& path, const Matrix& A) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write matrix file '" + path + "'");
  write_matrix(out, A);
  if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace lrcones
