#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lrcones/limits.hpp"

using namespace lrcones;

namespace {

Subspace line(double angle) {
  Matrix b(2, 1);
  b << std::cos(angle), std::sin(angle);
  return Subspace::from_orthonormal(b);
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::Io;
}

Verdict verdict_of(const LimitReport& rep, const std::string& name) {
  const Clause* c = rep.find(name);
  EXPECT_NE(c, nullptr) << name;
  return c ? c->verdict : Verdict::Fail;
}

}  // namespace

TEST(Gap, Examples) {
  EXPECT_NEAR(gap_distance(line(0.3), line(0.3)), 0.0, 1e-15);
  EXPECT_NEAR(gap_distance(line(0.0), line(std::numbers::pi / 2)), 1.0, 1e-15);
  EXPECT_NEAR(gap_distance(line(0.0), line(std::numbers::pi / 6)), 0.5, 1e-15);
}

TEST(Gap, DimensionMismatch) {
  const Subspace a = Subspace::from_orthonormal(Matrix::Identity(3, 1));
  const Subspace b = Subspace::from_orthonormal(Matrix::Identity(3, 2));
  EXPECT_EQ(code_of([&] { gap_distance(a, b); }), ErrorCode::InvalidInput);
  const Subspace c = Subspace::from_orthonormal(Matrix::Identity(4, 1));
  EXPECT_EQ(code_of([&] { gap_distance(a, c); }), ErrorCode::InvalidInput);
}

TEST(Gap, NonOrthonormalBasisRejected) {
  EXPECT_EQ(code_of([] { Subspace::from_orthonormal(2.0 * Matrix::Identity(3, 1)); }),
            ErrorCode::InvalidInput);
}

TEST(Vectorization, RowMajorRoundTrip) {
  Matrix M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  const Vector v = vec_row_major(M);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(v(i), i + 1);
  EXPECT_EQ(unvec_row_major(v, 2, 3), M);
}

TEST(TangentSpace, DimensionAndMembers) {
  RandomSource rng(4);
  const Matrix X = random_rank_matrix(4, 5, 2, rng);
  const Subspace T = tangent_space_at(X);
  EXPECT_EQ(T.ambient(), 20);
  EXPECT_EQ(T.dim(), 2 * (4 + 5 - 2));
  const ConeFrame f = cone_frame(X);
  const Matrix eta = sample_cone_member(f, {ConeKind::RegularTangent, 2}, rng);
  EXPECT_LE(distance_to_subspace(T, eta), 1e-10);
  const Matrix off = f.U_perp * rng.gaussian_matrix(2, 3) * f.V_perp.transpose();
  EXPECT_NEAR(distance_to_subspace(T, off), off.norm(), 1e-10);
}

TEST(TangentSpace, GapAlongRotation) {
  // Tangent spaces at diag(1, 0) rotated by theta move continuously.
  auto at = [](double th) {
    Matrix X = Matrix::Zero(2, 2);
    X(0, 0) = std::cos(th);
    X(1, 0) = std::sin(th);
    return tangent_space_at(X);
  };
  EXPECT_NEAR(gap_distance(at(0.0), at(0.0)), 0.0, 1e-12);
  EXPECT_GT(gap_distance(at(0.0), at(0.5)), 0.1);
  EXPECT_LT(gap_distance(at(0.0), at(1e-6)), 1e-5);
}

TEST(CertifyInner, LinearDecayCertified) {
  std::vector<double> res, dist;
  for (int i = 0; i < 100; ++i) {
    dist.push_back(1.0 / (i + 1));
    res.push_back(0.3 / (i + 1));
  }
  const InnerCertificate c = certify_inner(res, dist);
  EXPECT_TRUE(c.certified);
  EXPECT_NEAR(c.C, 0.3, 1e-4);
}

TEST(CertifyInner, PlateauNotCertified) {
  std::vector<double> res(100, 0.2), dist;
  for (int i = 0; i < 100; ++i) dist.push_back(1.0 / (i + 1));
  const InnerCertificate c = certify_inner(res, dist);
  EXPECT_FALSE(c.certified);
  EXPECT_NEAR(c.tail_min, 0.2, 1e-15);
}

TEST(CertifyInner, LengthMismatch) {
  EXPECT_EQ(code_of([] { certify_inner({1.0}, {1.0, 2.0}); }), ErrorCode::InvalidInput);
}

TEST(Clusters, TwoAlternatingValues) {
  std::vector<Matrix> s;
  for (int i = 0; i < 40; ++i) s.push_back(Matrix::Constant(2, 2, i % 2 ? 1.0 : -1.0));
  const auto c = cluster_candidates(s);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].members.size(), 5u);
  EXPECT_LE((c[0].value - s[c[0].members[0]]).norm(), 1e-15);
}

TEST(Clusters, SingletonsDropped) {
  std::vector<Matrix> s;
  for (int i = 0; i < 40; ++i) s.push_back(Matrix::Constant(1, 1, i));
  EXPECT_TRUE(cluster_candidates(s).empty());
}

TEST(OuterCheck, ConstantBundleIsCertified) {
  RandomSource rng(8);
  const Matrix X = random_rank_matrix(4, 4, 2, rng);
  const SequenceBundle b = align_frames_constant_rank(X, std::vector<Matrix>(40, X));
  const ConeFrame f = cone_frame(X);
  const ConeSpec spec{ConeKind::RegularTangent, 2};
  const Matrix eta = sample_cone_member(f, spec, rng);
  const OuterCheck o = outer_cluster_check(b, spec, [&](std::size_t) { return eta; }, 2);
  EXPECT_TRUE(o.certified);
  EXPECT_FALSE(o.vacuous);
  ASSERT_EQ(o.candidates.size(), 1u);
  EXPECT_LE(o.upper_distances[0], 1e-12);
}

TEST(OuterCheck, SamplerViolationsFail) {
  RandomSource rng(9);
  const Matrix X = random_rank_matrix(4, 4, 2, rng);
  const SequenceBundle b = align_frames_constant_rank(X, std::vector<Matrix>(40, X));
  const ConeFrame f = cone_frame(X);
  const Matrix off = f.U_perp * Matrix::Identity(2, 2) * f.V_perp.transpose();
  const OuterCheck o =
      outer_cluster_check(b, {ConeKind::RegularTangent, 2}, [&](std::size_t) { return off; }, 2);
  EXPECT_EQ(o.sampler_violations, 40u);
  EXPECT_FALSE(o.certified);
}

TEST(OuterCheck, UpperBoundAtFullRankIsVacuous) {
  RandomSource rng(10);
  const Matrix X = random_rank_matrix(3, 3, 1, rng);
  const SequenceBundle b = align_frames_constant_rank(X, std::vector<Matrix>(20, X));
  const Matrix eta = sample_cone_member(cone_frame(X), {ConeKind::Tangent, 2}, rng);
  const OuterCheck o =
      outer_cluster_check(b, {ConeKind::Tangent, 2}, [&](std::size_t) { return eta; }, 3);
  EXPECT_TRUE(o.vacuous);
  EXPECT_TRUE(o.certified);
}

TEST(SuiteParams, Validation) {
  EXPECT_EQ(code_of([] { SuiteParams{4, 4, 0, 2, 2}.validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { SuiteParams{4, 4, 3, 2, 2}.validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { SuiteParams{4, 4, 1, 3, 2}.validate(); }), ErrorCode::InvalidParams);
  try {
    SuiteParams{4, 4, 1, 2, 4}.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
    EXPECT_NE(std::string(e.what()).find("r̄ < min(m,n)"), std::string::npos);
  }
}

TEST(MainSuite, SmallRunPasses) {
  RandomSource rng(0);
  const LimitReport rep = verify_main_theorem({4, 4, 1, 2, 2, 3, 100}, rng);
  EXPECT_TRUE(rep.passed()) << rep.to_json().dump(1);
  for (const char* name :
       {"inner_lower_bound", "outer_upper_bound", "strictness_inner", "strictness_outer"})
    EXPECT_EQ(verdict_of(rep, name), Verdict::Pass) << name;
  EXPECT_FALSE(rep.residuals.empty());
}

TEST(MainSuite, UpperConeWholeSpaceIsVacuous) {
  RandomSource rng(1);
  const LimitReport rep = verify_main_theorem({5, 6, 1, 3, 4, 2, 100}, rng);
  EXPECT_TRUE(rep.passed());
  // lower rbar 4 + r - r_low = 6 >= min(5,6)
  EXPECT_EQ(verdict_of(rep, "outer_upper_bound"), Verdict::Vacuous);
  EXPECT_EQ(rep.to_json()["clauses"][1]["verdict"], "vacuous");
}

TEST(MainSuite, ContinuityWhenRanksCoincide) {
  RandomSource rng(2);
  const LimitReport rep = verify_main_theorem({4, 4, 2, 2, 2, 3, 100}, rng);
  EXPECT_TRUE(rep.passed()) << rep.to_json().dump(1);
  const Clause* c = rep.find("continuity");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->verdict, Verdict::Pass);
}

TEST(MainSuite, Deterministic) {
  const SuiteParams p{4, 4, 1, 2, 3, 2, 60};
  RandomSource a(42), b(42), c(43);
  const std::string ja = verify_main_theorem(p, a).to_json(false).dump();
  EXPECT_EQ(ja, verify_main_theorem(p, b).to_json(false).dump());
  EXPECT_NE(ja, verify_main_theorem(p, c).to_json(false).dump());
}

TEST(RegularTangentSuite, Passes) {
  RandomSource rng(3);
  const LimitReport rep = verify_regular_tangent_limits({4, 4, 1, 2, 2, 3, 100}, rng);
  EXPECT_TRUE(rep.passed()) << rep.to_json().dump(1);
  EXPECT_EQ(rep.suite, "regular_tangent");
}

TEST(NormalSuite, FloorAndRecovery) {
  RandomSource rng(4);
  const LimitReport rep = verify_normal_cone_limits({4, 4, 1, 2, 2, 3, 100}, rng);
  EXPECT_TRUE(rep.passed()) << rep.to_json().dump(1);
  const Clause* c = rep.find("inner_collapse");
  ASSERT_NE(c, nullptr);
  EXPECT_GE(c->residual_summary["floor_ratio_min"].get<double>(), 0.5);
  EXPECT_EQ(verdict_of(rep, "cluster_recovery"), Verdict::Pass);
}

TEST(NormalSuite, RequiresRankDrop) {
  RandomSource rng(5);
  EXPECT_EQ(code_of([&] { verify_normal_cone_limits({4, 4, 2, 2, 2, 1, 50}, rng); }),
            ErrorCode::InvalidParams);
}

TEST(WhitneySuite, Passes) {
  RandomSource rng(6);
  WhitneyParams p;
  p.trials = 2;
  p.N = 100;
  const LimitReport rep = whitney_a_regularity_check(p, rng);
  EXPECT_TRUE(rep.passed()) << rep.to_json().dump(1);
  EXPECT_EQ(rep.params["vectorization"], "row-major");
  EXPECT_LE(rep.find("gap_convergence")->residual_summary["tail_gap_max"].get<double>(), 1e-6);
}

TEST(WhitneySuite, Validation) {
  RandomSource rng(6);
  WhitneyParams p;
  p.r_low = 2;
  EXPECT_EQ(code_of([&] { whitney_a_regularity_check(p, rng); }), ErrorCode::InvalidParams);
}

TEST(PolarSuite, AllSequences) {
  for (PolarSequence s : {PolarSequence::Constant, PolarSequence::Dense, PolarSequence::Zero}) {
    RandomSource rng(7);
    PolarParams p;
    p.sequence = s;
    p.N = 80;
    const LimitReport rep = polar_limit_check(p, 3, rng);
    EXPECT_TRUE(rep.passed()) << to_string(s) << rep.to_json().dump(1);
  }
}

TEST(Report, JsonAndCsvShape) {
  RandomSource rng(11);
  const LimitReport rep = verify_regular_tangent_limits({4, 4, 1, 2, 2, 1, 40}, rng);
  const json j = rep.to_json();
  for (const char* key : {"suite", "params", "seed", "clauses", "passed", "runtime_ms"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_FALSE(rep.to_json(false).contains("runtime_ms"));
  const std::string csv = rep.to_csv();
  EXPECT_EQ(csv.rfind("index,probe_id,residual\n", 0), 0u);
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 40);
}
