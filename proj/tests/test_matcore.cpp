#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "lrcones/matcore.hpp"

using namespace lrcones;

namespace {

Matrix random_rank(Index m, Index n, Index r, RandomSource& rng) {
  return rng.gaussian_matrix(m, r) * rng.gaussian_matrix(r, n);
}

}  // namespace

TEST(Svd, DiagonalExample) {
  Matrix A(2, 2);
  A << 3, 0, 0, 4;
  const SvdFactors f = svd(A);
  EXPECT_NEAR(f.sigma(0), 4.0, 1e-14);
  EXPECT_NEAR(f.sigma(1), 3.0, 1e-14);
  EXPECT_LE((f.U * f.sigma.asDiagonal() * f.V.transpose() - A).norm(), 1e-14);
}

TEST(Svd, ZeroAndEmpty) {
  const SvdFactors z = svd(Matrix::Zero(3, 2));
  EXPECT_EQ(z.k(), 2);
  EXPECT_EQ(z.sigma.norm(), 0.0);
  const SvdFactors e = svd(Matrix(0, 3));
  EXPECT_EQ(e.k(), 0);
}

TEST(Svd, ReconstructionAndSigns) {
  RandomSource rng(11);
  for (int t = 0; t < 20; ++t) {
    const Matrix A = rng.gaussian_matrix(5, 3);
    const SvdFactors f = svd(A);
    EXPECT_LE((f.U * f.sigma.asDiagonal() * f.V.transpose() - A).norm(), 1e-12 * A.norm());
    EXPECT_LE(orthonormality_residual(f.U), 1e-12);
    EXPECT_LE(orthonormality_residual(f.V), 1e-12);
    for (Index j = 0; j + 1 < f.k(); ++j) EXPECT_GE(f.sigma(j), f.sigma(j + 1));
    for (Index j = 0; j < f.k(); ++j) {
      Index big = 0;
      f.U.col(j).cwiseAbs().maxCoeff(&big);
      EXPECT_GT(f.U(big, j), 0.0);
    }
  }
}

TEST(Svd, FullFactorsSpanComplements) {
  RandomSource rng(2);
  const Matrix A = random_rank(5, 4, 2, rng);
  const FullSvd f = full_svd(A);
  ASSERT_EQ(f.U.rows(), 5);
  ASSERT_EQ(f.U.cols(), 5);
  ASSERT_EQ(f.V.cols(), 4);
  EXPECT_LE(orthonormality_residual(f.U), 1e-12);
  EXPECT_LE(orthonormality_residual(f.V), 1e-12);
  EXPECT_LE((f.U.rightCols(3).transpose() * A).norm(), 1e-12 * A.norm());
}

TEST(Pinv, Examples) {
  Matrix A(2, 2);
  A << 2, 0, 0, 0;
  Matrix expected(2, 2);
  expected << 0.5, 0, 0, 0;
  EXPECT_LE((pinv(A) - expected).norm(), 1e-15);

  RandomSource rng(4);
  const Matrix U = random_stiefel(5, 2, rng);
  EXPECT_LE((pinv(U) - U.transpose()).norm(), 1e-12);

  RandomSource rng7(7);
  const Matrix X = random_rank(4, 4, 2, rng7);
  EXPECT_LE((X * pinv(X) * X - X).norm(), 1e-8);
}

TEST(OrthComplement, Examples) {
  Matrix e1(2, 1);
  e1 << 1, 0;
  const Matrix W = orth_complement(e1);
  ASSERT_EQ(W.cols(), 1);
  EXPECT_NEAR(std::abs(W(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(W(0, 0), 0.0, 1e-14);

  EXPECT_EQ(orth_complement(Matrix::Identity(3, 3)).cols(), 0);

  RandomSource rng(3);
  const Matrix U = random_stiefel(5, 2, rng);
  const Matrix C = orth_complement(U);
  EXPECT_LE((U.transpose() * C).norm(), 1e-10);
  EXPECT_LE(orthonormality_residual(C), 1e-10);
  EXPECT_EQ(orth_complement(U), C);
}

TEST(OrthComplement, RejectsNonOrthonormal) {
  Matrix A(3, 1);
  A << 2, 0, 0;
  try {
    orth_complement(A);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(Haar, Orthogonality) {
  RandomSource rng(0);
  for (Index n = 1; n <= 6; ++n) {
    const Matrix Q = haar_orthogonal(n, rng);
    EXPECT_LE(orthonormality_residual(Q), 1e-10);
  }
  const Matrix one = haar_orthogonal(1, rng);
  EXPECT_NEAR(std::abs(one(0, 0)), 1.0, 1e-15);
}

TEST(Haar, EntrywiseMeanNearZero) {
  Matrix mean = Matrix::Zero(4, 4);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RandomSource rng(seed);
    mean += haar_orthogonal(4, rng);
  }
  mean /= 1000.0;
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.05);
}

TEST(RandomSource, Deterministic) {
  RandomSource a(42), b(42);
  EXPECT_EQ(a.gaussian_matrix(3, 3), b.gaussian_matrix(3, 3));
  const RandomSource base(5);
  RandomSource s1 = base.derive(1), s1b = base.derive(1), s2 = base.derive(2);
  EXPECT_EQ(s1.next_u64(), s1b.next_u64());
  EXPECT_NE(base.derive(1).next_u64(), s2.next_u64());
}

TEST(Reversal, Examples) {
  EXPECT_EQ(reversal(0).size(), 0);
  Matrix J2(2, 2);
  J2 << 0, 1, 1, 0;
  EXPECT_EQ(reversal(2), J2);
  const Matrix J3 = reversal(3);
  EXPECT_EQ(J3 * J3, Matrix::Identity(3, 3));
}

TEST(SpectralNorm, Examples) {
  Matrix A(2, 2);
  A << 3, 0, 0, 2;
  EXPECT_NEAR(spectral_norm(A), 3.0, 1e-15);
  EXPECT_EQ(spectral_norm(Matrix::Zero(3, 3)), 0.0);
  EXPECT_NEAR(spectral_norm(reversal(2)), 1.0, 1e-15);
}

TEST(CountRank, Thresholds) {
  Vector s(3);
  s << 1.0, 1e-3, 1e-12;
  EXPECT_EQ(count_rank(s), 2);
  EXPECT_EQ(count_rank(s, kRankTol, 1e-2), 1);
  EXPECT_EQ(count_rank(Vector::Zero(2)), 0);
}

TEST(MatrixText, RoundTrip) {
  RandomSource rng(9);
  const Matrix A = rng.gaussian_matrix(3, 4);
  EXPECT_EQ(parse_matrix(format_matrix(A)), A);
  EXPECT_EQ(parse_matrix("0 3\n").cols(), 3);
}

TEST(MatrixText, Rejections) {
  for (const char* bad : {"2 2\n1 2 3\n", "x 2\n", "1 1\nnan\n", "1 1\n1 2\n", "1 1\n1.5abc\n"}) {
    try {
      parse_matrix(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidInput) << bad;
    }
  }
  try {
    load_matrix("/nonexistent/path/X.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/path/X.txt"), std::string::npos);
  }
}

TEST(MatrixText, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "lrcones_matcore_roundtrip.txt";
  RandomSource rng(1);
  const Matrix A = rng.gaussian_matrix(2, 5);
  save_matrix(path.string(), A);
  EXPECT_EQ(load_matrix(path.string()), A);
  std::filesystem::remove(path);
}

TEST(Projectors, RangeProjector) {
  RandomSource rng(12);
  const Matrix A = random_rank(5, 4, 2, rng);
  const Matrix P = range_projector(A);
  EXPECT_LE((P * P - P).norm(), 1e-12);
  EXPECT_LE((P * A - A).norm(), 1e-12 * A.norm());
  EXPECT_LE((P - A * pinv(A)).norm(), 1e-10);
  EXPECT_EQ(range_basis(A).cols(), 2);
}
