#pragma once

// Finite-sequence surrogates for inner and outer limits of cone-valued maps
// along the sequences built in seqlab, and the verification suites built on
// them. An inner limit is certified when the residual d(probe, Cone(X_i))
// decays at least linearly in ||X_i - X||; an outer limit is estimated from
// cluster candidates of sampled cone members.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrcones/blockrank.hpp"
#include "lrcones/cones.hpp"
#include "lrcones/matcore.hpp"
#include "lrcones/seqlab.hpp"
#include "lrcones/variety.hpp"

namespace lrcones {

using json = nlohmann::json;

inline constexpr double kLimitTol = 1e-6;
inline constexpr double kClusterTol = 1e-4;
inline constexpr double kTailFraction = 0.25;

// ---------------------------------------------------------------------------
// Subspaces and the gap distance

struct Subspace {
  Matrix basis;  // column-orthonormal

  Index ambient() const { return basis.rows(); }
  Index dim() const { return basis.cols(); }
  Matrix projector() const { return basis * basis.transpose(); }

  static Subspace from_orthonormal(const Matrix& basis, double tol = 1e-10) {
    if (orthonormality_residual(basis) > tol)
      fail(ErrorCode::InvalidInput, "Subspace: basis is not column-orthonormal");
    return Subspace{basis};
  }
  static Subspace span_of(const Matrix& vectors) { return Subspace{range_basis(vectors)}; }
};

inline double gap_distance(const Subspace& a, const Subspace& b) {
  if (a.ambient() != b.ambient())
    fail(ErrorCode::InvalidInput, "gap_distance: ambient dimensions differ");
  if (a.dim() != b.dim())
    fail(ErrorCode::InvalidInput, "gap_distance: subspace dimensions differ");
  return spectral_norm(a.projector() - b.projector());
}

/// Row-major vectorization: entry (i, j) goes to position i * cols + j.
inline Vector vec_row_major(const Matrix& M) {
  Vector v(M.size());
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) v(i * M.cols() + j) = M(i, j);
  return v;
}

inline Matrix unvec_row_major(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) fail(ErrorCode::InvalidInput, "unvec_row_major: size mismatch");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = v(i * cols + j);
  return M;
}

/// Tangent space of the rank-r manifold at a point whose column space is
/// spanned by U and row space by V (both orthonormal), as a subspace of
/// R^{mn}: vec(u v^T) for u in U and any v, and for u in U_perp and v in V.
inline Subspace tangent_space(const Matrix& U, const Matrix& U_perp, const Matrix& V,
                              const Matrix& V_perp) {
  const Index m = U.rows();
  const Index n = V.rows();
  const Index r = U.cols();
  Matrix right(n, n);
  right << V, V_perp;
  Matrix basis(m * n, r * n + U_perp.cols() * r);
  Index c = 0;
  for (Index a = 0; a < r; ++a)
    for (Index b = 0; b < n; ++b) basis.col(c++) = vec_row_major(U.col(a) * right.col(b).transpose());
  for (Index a = 0; a < U_perp.cols(); ++a)
    for (Index b = 0; b < r; ++b) basis.col(c++) = vec_row_major(U_perp.col(a) * V.col(b).transpose());
  return Subspace{basis};
}

inline Subspace tangent_space_at(const Matrix& X, double tol = kRankTol) {
  const ConeFrame f = cone_frame(X, tol);
  return tangent_space(f.U, f.U_perp, f.V, f.V_perp);
}

inline double distance_to_subspace(const Subspace& S, const Matrix& M) {
  const Vector v = vec_row_major(M);
  return (v - S.basis * (S.basis.transpose() * v)).norm();
}

// ---------------------------------------------------------------------------
// Inner limits

inline std::vector<ConeFrame> bundle_frames(const SequenceBundle& bundle, double tol = kRankTol) {
  std::vector<ConeFrame> out;
  out.reserve(bundle.size());
  for (const Matrix& Xi : bundle.X_seq) out.push_back(cone_frame(Xi, tol));
  return out;
}

inline std::vector<double> bundle_distances(const SequenceBundle& bundle) {
  std::vector<double> out;
  out.reserve(bundle.size());
  for (const Matrix& Xi : bundle.X_seq) out.push_back((Xi - bundle.target).norm());
  return out;
}

inline std::vector<double> inner_residual_profile(const std::vector<ConeFrame>& frames,
                                                  const ConeSpec& spec, const Matrix& probe) {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const ConeFrame& f : frames) out.push_back(cone_distance(f, spec, probe));
  return out;
}

inline std::vector<double> inner_residual_profile(const SequenceBundle& bundle,
                                                  const ConeSpec& spec, const Matrix& probe) {
  return inner_residual_profile(bundle_frames(bundle), spec, probe);
}

struct InnerCertificate {
  bool certified = false;
  double C = 0.0;           // fitted on the first half
  double max_excess = 0.0;  // max of residual - (C dist + tol) on the second half
  double tail_max = 0.0;    // residual range on the second half
  double tail_min = 0.0;
};

/// residual_i <= C * dist_i + tol with C the smallest constant that works on
/// the first half, checked on the second half.
inline InnerCertificate certify_inner(const std::vector<double>& residuals,
                                      const std::vector<double>& distances,
                                      double tol = kLimitTol) {
  if (residuals.size() != distances.size())
    fail(ErrorCode::InvalidInput, "certify_inner: profile and distances differ in length");
  InnerCertificate c;
  const std::size_t N = residuals.size();
  if (N == 0) {
    c.certified = true;
    return c;
  }
  const std::size_t half = N / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double excess = residuals[i] - tol;
    if (excess <= 0.0) continue;
    c.C = distances[i] > 0.0 ? std::max(c.C, excess / distances[i])
                             : std::numeric_limits<double>::infinity();
  }
  c.max_excess = -std::numeric_limits<double>::infinity();
  c.tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = half; i < N; ++i) {
    c.max_excess = std::max(c.max_excess, residuals[i] - (c.C * distances[i] + tol));
    c.tail_max = std::max(c.tail_max, residuals[i]);
    c.tail_min = std::min(c.tail_min, residuals[i]);
  }
  c.certified = std::isfinite(c.C) && c.max_excess <= 0.0;
  return c;
}

// ---------------------------------------------------------------------------
// Outer limits

struct ClusterCandidate {
  Matrix value;
  std::vector<std::size_t> members;
};

/// Greedy complete-linkage grouping of the tail window: an element joins a
/// group when it is within cluster_tol of every member. Groups of one element
/// are not candidates.
inline std::vector<ClusterCandidate> cluster_candidates(const std::vector<Matrix>& samples,
                                                        double cluster_tol = kClusterTol,
                                                        double tail_fraction = kTailFraction) {
  const std::size_t N = samples.size();
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(N)));
  const std::size_t start = N - std::min(N, tail);
  std::vector<bool> used(N, false);
  std::vector<ClusterCandidate> out;
  for (std::size_t i = start; i < N; ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < N; ++j) {
      if (used[j]) continue;
      bool close = true;
      for (std::size_t g : group)
        if ((samples[j] - samples[g]).norm() > cluster_tol) {
          close = false;
          break;
        }
      if (close) group.push_back(j);
    }
    if (group.size() < 2) continue;
    Matrix mean = Matrix::Zero(samples[i].rows(), samples[i].cols());
    for (std::size_t g : group) {
      used[g] = true;
      mean += samples[g];
    }
    mean /= static_cast<double>(group.size());
    out.push_back({mean, group});
  }
  return out;
}

/// Per-index sampler of cone members eta_i in Cone(X_i).
using MemberSampler = std::function<Matrix(std::size_t)>;

struct OuterCheck {
  std::vector<ClusterCandidate> candidates;
  std::vector<double> upper_distances;  // relative: d / max(1, ||candidate||)
  std::size_t sampler_violations = 0;   // samples outside Cone(X_i)
  bool vacuous = false;
  bool certified = false;
};

/// Cluster candidates of sampled members and their distance to
/// T_{<= upper_rbar}(X). The upper cone is the whole space, and the check
/// vacuous, when upper_rbar >= min(m,n).
inline OuterCheck outer_cluster_check(const SequenceBundle& bundle,
                                      const std::vector<ConeFrame>& frames, const ConeSpec& spec,
                                      const MemberSampler& sampler, Index upper_rbar,
                                      double tol = kLimitTol) {
  OuterCheck out;
  std::vector<Matrix> samples;
  samples.reserve(bundle.size());
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    samples.push_back(sampler(i));
    if (!cone_membership(frames[i], spec, samples.back())) ++out.sampler_violations;
  }
  out.candidates = cluster_candidates(samples);
  const ConeFrame target = cone_frame(bundle.target);
  out.vacuous = upper_rbar >= std::min(bundle.m(), bundle.n());
  bool ok = out.sampler_violations == 0;
  for (const ClusterCandidate& c : out.candidates) {
    double d = 0.0;
    if (!out.vacuous)
      d = cone_distance(target, {ConeKind::Tangent, upper_rbar}, c.value) /
          std::max(1.0, c.value.norm());
    out.upper_distances.push_back(d);
    if (d > tol) ok = false;
  }
  out.certified = ok;
  return out;
}

inline OuterCheck outer_cluster_check(const SequenceBundle& bundle, const ConeSpec& spec,
                                      const MemberSampler& sampler, Index upper_rbar,
                                      double tol = kLimitTol) {
  return outer_cluster_check(bundle, bundle_frames(bundle), spec, sampler, upper_rbar, tol);
}

/// Coordinates in which a rank-r point is [I_r 0; 0 0]: cone rules applied
/// to a coefficient matrix M that is later embedded with frames.
inline ConeFrame coordinate_frame(Index m, Index n, Index r) {
  ConeFrame f;
  f.X = Matrix::Zero(m, n);
  f.X.topLeftCorner(r, r).setIdentity();
  f.r = r;
  const Matrix Im = Matrix::Identity(m, m);
  const Matrix In = Matrix::Identity(n, n);
  f.U = Im.leftCols(r);
  f.U_perp = Im.rightCols(m - r);
  f.V = In.leftCols(r);
  f.V_perp = In.rightCols(n - r);
  f.sigma = Vector::Ones(r);
  return f;
}

inline Matrix embed_coefficients(const IndexFrames& f, const Matrix& M) {
  return f.left() * M * f.right().transpose();
}

// ---------------------------------------------------------------------------
// Reports

enum class Verdict { Pass, Fail, Vacuous };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Vacuous: return "vacuous";
  }
  return "fail";
}

struct Clause {
  std::string name;
  Verdict verdict = Verdict::Pass;
  json residual_summary = json::object();
  json probes = json::array();

  void require(bool ok) {
    if (!ok) verdict = Verdict::Fail;
  }
  void track_max(const std::string& key, double v) {
    if (!std::isfinite(v)) return;
    if (!residual_summary.contains(key) || residual_summary[key].get<double>() < v)
      residual_summary[key] = v;
  }
  void track_min(const std::string& key, double v) {
    if (!std::isfinite(v)) return;
    if (!residual_summary.contains(key) || residual_summary[key].get<double>() > v)
      residual_summary[key] = v;
  }
  void count(const std::string& key, int by = 1) {
    residual_summary[key] = residual_summary.value(key, 0) + by;
  }
};

struct ResidualRow {
  std::size_t index;
  std::string probe_id;
  double residual;
};

struct LimitReport {
  std::string suite;
  json params = json::object();
  std::uint64_t seed = 0;
  std::vector<Clause> clauses;
  std::vector<ResidualRow> residuals;
  double runtime_ms = 0.0;

  bool passed() const {
    return std::none_of(clauses.begin(), clauses.end(),
                        [](const Clause& c) { return c.verdict == Verdict::Fail; });
  }

  const Clause* find(const std::string& name) const {
    for (const Clause& c : clauses)
      if (c.name == name) return &c;
    return nullptr;
  }

  void add_profile(const std::string& probe_id, const std::vector<double>& profile) {
    for (std::size_t i = 0; i < profile.size(); ++i) residuals.push_back({i, probe_id, profile[i]});
  }

  json to_json(bool include_runtime = true) const {
    json j;
    j["suite"] = suite;
    j["params"] = params;
    j["seed"] = seed;
    j["rng"] = RandomSource::kAlgorithm;
    j["scope"] = "constructed sequences only; limits over all sequences are not enumerable";
    json cl = json::array();
    for (const Clause& c : clauses)
      cl.push_back({{"name", c.name},
                    {"verdict", to_string(c.verdict)},
                    {"residual_summary", c.residual_summary},
                    {"probes", c.probes}});
    j["clauses"] = cl;
    j["passed"] = passed();
    if (include_runtime) j["runtime_ms"] = runtime_ms;
    return j;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "index,probe_id,residual\n";
    char buf[64];
    for (const ResidualRow& r : residuals) {
      std::snprintf(buf, sizeof buf, "%.17g", r.residual);
      os << r.index << ',' << r.probe_id << ',' << buf << '\n';
    }
    return os.str();
  }
};

inline void write_report(const LimitReport& report, const std::string& json_path,
                         const std::string& csv_path) {
  std::ofstream js(json_path);
  if (!js) fail(ErrorCode::Io, "cannot write '" + json_path + "'");
  js << report.to_json().dump(2) << '\n';
  std::ofstream cs(csv_path);
  if (!cs) fail(ErrorCode::Io, "cannot write '" + csv_path + "'");
  cs << report.to_csv();
}

// ---------------------------------------------------------------------------
// Verification suites

struct SuiteParams {
  Index m = 4;
  Index n = 4;
  Index r_low = 1;
  Index r = 2;
  Index rbar = 2;
  std::size_t trials = 20;
  std::size_t N = 200;

  void validate() const {
    if (m < 1 || n < 1) fail(ErrorCode::InvalidParams, "require m, n >= 1");
    if (r_low < 1) fail(ErrorCode::InvalidParams, "require 1 ≤ r̲");
    if (r_low > r) fail(ErrorCode::InvalidParams, "require r̲ ≤ r");
    if (r > rbar) fail(ErrorCode::InvalidParams, "require r ≤ r̄");
    if (rbar >= std::min(m, n)) fail(ErrorCode::InvalidParams, "require r̄ < min(m,n)");
    if (trials < 1) fail(ErrorCode::InvalidParams, "require trials >= 1");
    if (N < 8) fail(ErrorCode::InvalidParams, "require N >= 8");
  }

  json to_json() const {
    return {{"m", m}, {"n", n}, {"r_low", r_low}, {"r", r}, {"rbar", rbar}, {"trials", trials},
            {"N", N}};
  }
};

/// Random m x n matrix of rank r with Haar singular frames and singular
/// values 1 + 0.5 (r - 1 - j), so consecutive ones are separated by 0.5.
inline Matrix random_rank_matrix(Index m, Index n, Index r, RandomSource& rng) {
  const Matrix U = random_stiefel(m, r, rng);
  const Matrix V = random_stiefel(n, r, rng);
  Vector s(r);
  for (Index j = 0; j < r; ++j) s(j) = 1.0 + 0.5 * static_cast<double>(r - 1 - j);
  return U * s.asDiagonal() * V.transpose();
}

/// Column-orthonormal p x k times its transpose counterpart: all nonzero
/// singular values equal one.
inline Matrix partial_isometry(Index p, Index q, Index k, RandomSource& rng) {
  return random_stiefel(p, k, rng) * random_stiefel(q, k, rng).transpose();
}

namespace detail {

inline std::string probe_name(std::size_t trial, const std::string& label) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%02zu_", trial);
  return buf + label;
}

inline json probe_record(const std::string& id, const std::string& provenance,
                         const InnerCertificate& c, double norm) {
  json j = {{"id", id},
            {"provenance", provenance},
            {"certified", c.certified},
            {"norm", norm},
            {"tail_max", c.tail_max},
            {"tail_min", c.tail_min}};
  j["C"] = std::isfinite(c.C) ? json(c.C) : json(nullptr);
  return j;
}

inline double min_from(const std::vector<double>& v, std::size_t start) {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = start; i < v.size(); ++i) out = std::min(out, v[i]);
  return out;
}

// Shared by the tangent and regular-tangent suites: the cone
// along the sequence is seq_spec, the lower bound at X is
// T_{<= rbar_seq - r + r_low}(X), the upper bound T_{<= rbar_seq + r - r_low}(X).
inline LimitReport run_tangent_suite(const std::string& suite, const SuiteParams& p,
                                     ConeKind seq_kind, Index rbar_seq, RandomSource& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  LimitReport rep;
  rep.suite = suite;
  rep.params = p.to_json();
  rep.params["sequence_cone"] = to_string(seq_kind);
  rep.params["sequence_rbar"] = rbar_seq;
  rep.seed = rng.seed();

  const Index m = p.m;
  const Index n = p.n;
  const Index mn = std::min(m, n);
  const Index k = p.r - p.r_low;
  const Index s = rbar_seq - p.r;
  const Index lower = rbar_seq - p.r + p.r_low;
  const Index upper = rbar_seq + p.r - p.r_low;
  const ConeSpec seq_spec{seq_kind, rbar_seq};
  const ConeSpec lower_spec{ConeKind::Tangent, lower};
  const bool vacuous = upper >= mn;
  rep.params["lower_rbar"] = lower;
  rep.params["upper_rbar"] = upper;

  Clause inner{"inner_lower_bound"}, outer{"outer_upper_bound"}, strict_in{"strictness_inner"},
      strict_out{"strictness_outer"}, cont{"continuity"};

  for (std::size_t t = 0; t < p.trials; ++t) {
    RandomSource trng = rng.derive(t);
    const Matrix X = random_rank_matrix(m, n, p.r_low, trng);
    const ConeFrame fx = cone_frame(X);
    const Index pp = m - p.r_low;
    const Index qq = n - p.r_low;

    if (k == 0) {
      // Constant-rank regime: the cone map is continuous.
      const SequenceBundle b =
          align_frames_constant_rank(X, constant_rank_sequence(X, p.N, trng));
      const auto frames = bundle_frames(b);
      const auto dist = bundle_distances(b);
      for (int j = 0; j < 3; ++j) {
        const Matrix probe = sample_cone_member(fx, lower_spec, trng);
        const std::string id = probe_name(t, "member_" + std::to_string(j));
        const LiftedVectorSequence lift = lift_tangent_vector(b, rbar_seq, probe);
        for (std::size_t i = 0; i < b.size(); ++i)
          if (!cone_membership(frames[i], seq_spec, lift.eta_seq[i])) {
            cont.count("lift_violations");
            cont.require(false);
          }
        const auto prof = inner_residual_profile(frames, seq_spec, probe);
        const InnerCertificate c = certify_inner(prof, dist);
        rep.add_profile(id, prof);
        cont.probes.push_back(probe_record(id, "lower-cone member", c, probe.norm()));
        cont.require(c.certified);
        cont.track_max("member_tail_max", c.tail_max);
      }
      // Nonmember: isotropic D block one rank over the budget.
      const Matrix W = partial_isometry(pp, qq, s + 1, trng);
      const Matrix bad = fx.U_perp * W * fx.V_perp.transpose();
      const auto prof = inner_residual_profile(frames, seq_spec, bad);
      const InnerCertificate c = certify_inner(prof, dist);
      const std::string id = probe_name(t, "nonmember");
      rep.add_profile(id, prof);
      const double floor_ratio = min_from(prof, p.N / 2) / bad.norm();
      json rec = probe_record(id, "random", c, bad.norm());
      rec["floor_ratio"] = floor_ratio;
      cont.probes.push_back(rec);
      cont.require(!c.certified && floor_ratio >= 0.1);
      cont.track_min("nonmember_floor_ratio", floor_ratio);

      const ConeFrame coords = coordinate_frame(m, n, p.r);
      const Matrix M = project_cone(coords, seq_spec, trng.gaussian_matrix(m, n));
      const OuterCheck oc = outer_cluster_check(
          b, frames, seq_spec, [&](std::size_t i) { return embed_coefficients(b.frames[i], M); },
          rbar_seq);
      cont.require(oc.certified && !oc.candidates.empty());
      cont.count("cluster_candidates", static_cast<int>(oc.candidates.size()));
      for (double d : oc.upper_distances) cont.track_max("candidate_distance_max", d);
      continue;
    }

    // Strictly decreasing rank: dense-cluster bundle with two anchors, the
    // first one rotated so that a maximal-rank upper-cone member recurs.
    const Index d_star = std::min({2 * k + s, pp, qq});
    const Matrix A = trng.gaussian_matrix(p.r_low, p.r_low);
    const Matrix B = trng.gaussian_matrix(p.r_low, qq);
    const Matrix C = trng.gaussian_matrix(pp, p.r_low);
    const Matrix D = trng.gaussian_matrix(pp, d_star) * trng.gaussian_matrix(d_star, qq);
    const Matrix eta_star = reassemble(fx, {A, B, C, D});
    const CornerRotation rot = rotate_to_low_rank_corner(D, k, s);
    const AnchorFrame strict_anchor{fx.U_perp * rot.U, fx.V_perp * rot.V};
    const AnchorFrame random_anchor{fx.U_perp * haar_orthogonal(pp, trng),
                                    fx.V_perp * haar_orthogonal(qq, trng)};
    DenseClusterOptions opts;
    opts.anchors = {strict_anchor, random_anchor};
    const SequenceBundle b = dense_cluster_sequence(X, p.r, p.N, trng, opts);
    const auto frames = bundle_frames(b);
    const auto dist = bundle_distances(b);

    // Lower-cone probes: lifted members and decaying residuals.
    std::vector<Matrix> lower_probes{Matrix::Zero(m, n)};
    for (int j = 0; j < 3; ++j) lower_probes.push_back(sample_cone_member(fx, lower_spec, trng));
    for (std::size_t j = 0; j < lower_probes.size(); ++j) {
      const Matrix& probe = lower_probes[j];
      const std::string id = probe_name(t, "lower_" + std::to_string(j));
      const LiftedVectorSequence lift = lift_tangent_vector(b, rbar_seq, probe);
      for (std::size_t i = 0; i < b.size(); ++i)
        if (!cone_membership(frames[i], seq_spec, lift.eta_seq[i])) {
          inner.count("lift_violations");
          inner.require(false);
        }
      const auto prof = inner_residual_profile(frames, seq_spec, probe);
      const InnerCertificate c = certify_inner(prof, dist);
      rep.add_profile(id, prof);
      json rec = probe_record(id, "lower-cone member", c, probe.norm());
      if (!vacuous) {
        const double sandwich =
            cone_distance(fx, {ConeKind::Tangent, upper}, probe) / std::max(1.0, probe.norm());
        rec["upper_distance"] = sandwich;
        inner.require(sandwich <= kLimitTol);
      }
      inner.probes.push_back(rec);
      inner.require(c.certified);
      inner.track_max("tail_max", c.tail_max);
      inner.track_max("C_max", c.C);
    }

    // Negative controls: upper-only members are not inner-certified.
    std::vector<std::pair<std::string, Matrix>> controls{{"planted_upper", eta_star}};
    if (s + 1 <= std::min(pp, qq))
      controls.emplace_back("beyond_lower",
                            fx.U_perp * partial_isometry(pp, qq, s + 1, trng) * fx.V_perp.transpose());
    for (const auto& [label, probe] : controls) {
      const std::string id = probe_name(t, label);
      const auto prof = inner_residual_profile(frames, seq_spec, probe);
      const InnerCertificate c = certify_inner(prof, dist);
      rep.add_profile(id, prof);
      json rec = probe_record(id, "upper-cone-only member", c, probe.norm());
      rec["in_lower_cone"] = cone_membership(fx, lower_spec, probe);
      strict_in.probes.push_back(rec);
      strict_in.require(!c.certified && !rec["in_lower_cone"].get<bool>());
      strict_in.track_max("tail_max", c.tail_max);
    }

    // Outer limit: fixed coefficients per anchor, the planted member's at the
    // rotated anchor.
    const ConeFrame coords = coordinate_frame(m, n, p.r);
    Matrix M_star(m, n);
    M_star << A, B * rot.V, rot.U.transpose() * C, rot.Mprime;
    const Matrix M_haar = project_cone(coords, seq_spec, trng.gaussian_matrix(m, n));
    const Matrix M_rand = project_cone(coords, seq_spec, trng.gaussian_matrix(m, n));
    auto sampler = [&](std::size_t i) {
      const int a = b.anchor_of_index[i];
      const Matrix& M = a == 0 ? M_star : (a == 1 ? M_rand : M_haar);
      return embed_coefficients(b.frames[i], M);
    };
    const OuterCheck oc = outer_cluster_check(b, frames, seq_spec, sampler, upper);
    outer.require(oc.certified);
    outer.count("cluster_candidates", static_cast<int>(oc.candidates.size()));
    outer.count("sampler_violations", static_cast<int>(oc.sampler_violations));
    for (double d : oc.upper_distances) outer.track_max("candidate_distance_max", d);

    // Strictness: the planted member is recovered, lies outside the lower
    // cone and inside the upper one.
    bool recovered = false;
    for (const ClusterCandidate& cand : oc.candidates) {
      const double gap = (cand.value - eta_star).norm() / std::max(1.0, eta_star.norm());
      if (gap > kLimitTol) continue;
      const bool in_lower = cone_membership(fx, lower_spec, cand.value);
      const double up = vacuous ? 0.0
                                : cone_distance(fx, {ConeKind::Tangent, upper}, cand.value) /
                                      std::max(1.0, cand.value.norm());
      strict_out.probes.push_back({{"id", probe_name(t, "planted_candidate")},
                                   {"provenance", "upper-cone-only member"},
                                   {"recovery_distance", gap},
                                   {"in_lower_cone", in_lower},
                                   {"upper_distance", up},
                                   {"multiplicity", cand.members.size()}});
      if (!in_lower && up <= kLimitTol) recovered = true;
    }
    strict_out.require(recovered);
    strict_out.count("trials_with_witness", recovered ? 1 : 0);
  }

  if (k == 0) {
    rep.clauses.push_back(cont);
  } else {
    if (vacuous && outer.verdict == Verdict::Pass) outer.verdict = Verdict::Vacuous;
    rep.clauses = {inner, outer, strict_in, strict_out};
  }
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace detail

/// Inner limit of T_{<= rbar}(X_i) contains T_{<= rbar - r + r_low}(X) and
/// the outer limit lies in T_{<= rbar + r - r_low}(X), both inclusions strict
/// when r_low < r; continuity when r_low = r.
inline LimitReport verify_main_theorem(const SuiteParams& p, RandomSource& rng) {
  p.validate();
  return detail::run_tangent_suite("main", p, ConeKind::Tangent, p.rbar, rng);
}

/// The same chain for the regular tangent cones of the rank-r matrices along
/// the sequence (rbar taken equal to r): lower bound the tangent space at X,
/// upper bound T_{<= 2r - r_low}(X).
inline LimitReport verify_regular_tangent_limits(const SuiteParams& p, RandomSource& rng) {
  p.validate();
  return detail::run_tangent_suite("regular_tangent", p, ConeKind::RegularTangent, p.r, rng);
}

/// Inner limits of the three normal cones collapse to {0}; every limiting
/// normal at X is a cluster point of nu_i = U_i_perp A' V_i_perp^T; the Clarke
/// outer limit relative to the rank-r matrices is N_{<= r}(X).
inline LimitReport verify_normal_cone_limits(const SuiteParams& p, RandomSource& rng) {
  p.validate();
  if (p.r_low == p.r) fail(ErrorCode::InvalidParams, "require r̲ < r");
  const auto t0 = std::chrono::steady_clock::now();
  LimitReport rep;
  rep.suite = "normal";
  rep.params = p.to_json();
  rep.seed = rng.seed();
  const Index m = p.m;
  const Index n = p.n;
  const Index mn = std::min(m, n);
  const Index k = p.r - p.r_low;
  const Index pp = m - p.r_low;
  const Index qq = n - p.r_low;

  Clause collapse{"inner_collapse"}, recover{"cluster_recovery"}, clarke{"clarke_outer_limit"};

  // Limiting normal of rank rho at X and an anchor that realizes it:
  // [Ubar U_perp] = U_c [P_tail, P_head] where P_head carries the range.
  struct Planted {
    Matrix nu, coeff;
    AnchorFrame anchor;
  };
  auto plant = [&](const ConeFrame& fx, Index rho, RandomSource& g) {
    const Matrix D = g.gaussian_matrix(pp, rho) * g.gaussian_matrix(rho, qq);
    const FullSvd f = full_svd(D);
    Planted out;
    out.nu = fx.U_perp * D * fx.V_perp.transpose();
    Matrix PU(pp, pp), QV(qq, qq);
    PU << f.U.rightCols(k), f.U.leftCols(pp - k);
    QV << f.V.rightCols(k), f.V.leftCols(qq - k);
    out.anchor = {fx.U_perp * PU, fx.V_perp * QV};
    out.coeff = Matrix::Zero(m, n);
    out.coeff.bottomRightCorner(m - p.r, n - p.r) =
        f.U.leftCols(pp - k).transpose() * D * f.V.leftCols(qq - k);
    return out;
  };

  const ConeKind kinds[] = {ConeKind::Normal, ConeKind::RegularNormal, ConeKind::ClarkeNormal};
  for (std::size_t t = 0; t < p.trials; ++t) {
    RandomSource trng = rng.derive(t);
    const Matrix X = random_rank_matrix(m, n, p.r_low, trng);
    const ConeFrame fx = cone_frame(X);
    const Planted limiting = plant(fx, mn - p.rbar, trng);
    const Planted at_r = plant(fx, mn - p.r, trng);
    DenseClusterOptions opts;
    opts.anchors = {limiting.anchor, at_r.anchor};
    const SequenceBundle b = dense_cluster_sequence(X, p.r, p.N, trng, opts);
    const auto frames = bundle_frames(b);
    const auto dist = bundle_distances(b);

    // (a) floors for probes that are not limits of normals.
    const Index l = mn - p.r_low;
    std::vector<std::pair<std::string, Matrix>> floor_probes{
        {"clarke_isotropic", fx.U_perp * partial_isometry(pp, qq, l, trng) * fx.V_perp.transpose()},
        {"tangent_space", sample_cone_member(fx, {ConeKind::RegularTangent, p.r_low}, trng)}};
    for (const auto& [label, probe] : floor_probes)
      for (ConeKind kind : kinds) {
        const std::string id = detail::probe_name(t, label + "_vs_" + to_string(kind));
        const auto prof = inner_residual_profile(frames, {kind, p.rbar}, probe);
        const InnerCertificate c = certify_inner(prof, dist);
        rep.add_profile(id, prof);
        const double ratio = detail::min_from(prof, p.N / 2) / probe.norm();
        json rec = detail::probe_record(id, label == "tangent_space" ? "random" : "clarke-normal member", c,
                                probe.norm());
        rec["floor_ratio"] = ratio;
        collapse.probes.push_back(rec);
        collapse.require(!c.certified && ratio * probe.norm() >= 10 * kLimitTol);
        collapse.track_min("floor_ratio_min", ratio);
      }
    // Limiting normals are cluster points, so their residual has no floor
    // at every index, but they are still not inner-certified.
    for (ConeKind kind : {ConeKind::Normal, ConeKind::ClarkeNormal}) {
      const std::string id = detail::probe_name(t, std::string("limiting_vs_") + to_string(kind));
      const auto prof = inner_residual_profile(frames, {kind, p.rbar}, limiting.nu);
      const InnerCertificate c = certify_inner(prof, dist);
      rep.add_profile(id, prof);
      collapse.probes.push_back(detail::probe_record(id, "normal-cone member", c, limiting.nu.norm()));
      collapse.require(!c.certified);
    }
    const ConeFrame coords = coordinate_frame(m, n, p.r);

    // (b) nu_i = U_i_perp A' V_i_perp^T recovers the planted limiting normal.
    {
      const ConeSpec spec{ConeKind::Normal, p.rbar};
      const OuterCheck oc = outer_cluster_check(
          b, frames, spec, [&](std::size_t i) { return embed_coefficients(b.frames[i], limiting.coeff); },
          mn);
      bool found = false;
      bool all_in = oc.sampler_violations == 0;
      double best = std::numeric_limits<double>::infinity();
      for (const ClusterCandidate& cand : oc.candidates) {
        const double d = (cand.value - limiting.nu).norm() / std::max(1.0, limiting.nu.norm());
        best = std::min(best, d);
        if (d <= kLimitTol) found = true;
        if (!cone_membership(fx, spec, cand.value)) all_in = false;
      }
      recover.probes.push_back({{"id", detail::probe_name(t, "limiting_normal")},
                                {"provenance", "normal-cone member"},
                                {"recovery_distance", best},
                                {"candidates", oc.candidates.size()}});
      recover.require(found && all_in);
      recover.track_max("recovery_distance_max", best);
    }

    // (c) Clarke normals relative to the rank-r matrices: clusters lie in
    // N_{<= r}(X) and the planted member of N_{<= r}(X) is one of them.
    {
      const ConeSpec along{ConeKind::ClarkeNormal, p.r};
      const ConeSpec at_x{ConeKind::Normal, p.r};
      const Matrix W_haar = project_cone(coords, along, trng.gaussian_matrix(m, n));
      const Matrix W_lim = project_cone(coords, along, trng.gaussian_matrix(m, n));
      const OuterCheck oc = outer_cluster_check(
          b, frames, along,
          [&](std::size_t i) {
            const int a = b.anchor_of_index[i];
            return embed_coefficients(b.frames[i], a == 1 ? at_r.coeff : (a == 0 ? W_lim : W_haar));
          },
          mn);
      bool found = false;
      bool all_in = oc.sampler_violations == 0;
      for (const ClusterCandidate& cand : oc.candidates) {
        if ((cand.value - at_r.nu).norm() <= kLimitTol * std::max(1.0, at_r.nu.norm())) found = true;
        if (!cone_membership(fx, at_x, cand.value)) all_in = false;
      }
      clarke.probes.push_back({{"id", detail::probe_name(t, "clarke_limit")},
                               {"provenance", "normal-cone member"},
                               {"recovered", found},
                               {"candidates_in_normal_cone", all_in},
                               {"candidates", oc.candidates.size()}});
      clarke.require(found && all_in);
    }
  }
  rep.clauses = {collapse, recover, clarke};
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct WhitneyParams {
  Index m = 4;
  Index n = 4;
  Index r_low = 1;
  Index r = 2;
  std::size_t trials = 10;
  std::size_t N = 200;

  void validate() const {
    if (r_low < 1) fail(ErrorCode::InvalidParams, "require 1 ≤ r̲");
    if (r_low >= r) fail(ErrorCode::InvalidParams, "require r̲ < r");
    if (r >= std::min(m, n)) fail(ErrorCode::InvalidParams, "require r < min(m,n)");
    if (trials < 1) fail(ErrorCode::InvalidParams, "require trials >= 1");
    if (N < 8) fail(ErrorCode::InvalidParams, "require N >= 8");
  }
  json to_json() const {
    return {{"m", m}, {"n", n}, {"r_low", r_low}, {"r", r}, {"trials", trials}, {"N", N}};
  }
};

/// Along a bundle with one complement frame reused at every index, tangent
/// spaces of the rank-r matrices converge in gap distance to a limit that
/// contains the tangent space at X; inner and outer limits agree with it.
inline LimitReport whitney_a_regularity_check(const WhitneyParams& p, RandomSource& rng) {
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  LimitReport rep;
  rep.suite = "whitney";
  rep.params = p.to_json();
  rep.params["vectorization"] = "row-major";
  rep.seed = rng.seed();
  const Index m = p.m;
  const Index n = p.n;
  Clause gap{"gap_convergence"}, areg{"a_regularity"}, inner{"inner_certification"},
      outer{"outer_in_limit"}, negative{"negative_control"};
  const ConeSpec along{ConeKind::RegularTangent, p.r};

  for (std::size_t t = 0; t < p.trials; ++t) {
    RandomSource trng = rng.derive(t);
    const Matrix X = random_rank_matrix(m, n, p.r_low, trng);
    const ConeFrame fx = cone_frame(X);
    DenseClusterOptions opts;
    opts.mode = FrameMode::Constant;
    const SequenceBundle b = dense_cluster_sequence(X, p.r, p.N, trng, opts);
    const auto frames = bundle_frames(b);
    const auto dist = bundle_distances(b);
    const IndexFrames& f0 = b.frames.front();
    Matrix UU(m, p.r), VV(n, p.r);
    UU << f0.U, f0.Ubar;
    VV << f0.V, f0.Vbar;
    const Subspace limit = tangent_space(UU, f0.Uperp, VV, f0.Vperp);

    std::vector<double> gaps;
    for (const ConeFrame& fi : frames)
      gaps.push_back(gap_distance(tangent_space(fi.U, fi.U_perp, fi.V, fi.V_perp), limit));
    rep.add_profile(detail::probe_name(t, "gap"), gaps);
    const double tail_gap =
        *std::max_element(gaps.begin() + static_cast<std::ptrdiff_t>(p.N - p.N / 4), gaps.end());
    gap.require(gaps.back() <= kLimitTol && tail_gap <= kLimitTol);
    gap.track_max("tail_gap_max", tail_gap);

    const Subspace at_x = tangent_space(fx.U, fx.U_perp, fx.V, fx.V_perp);
    const Matrix Pl = limit.projector();
    const double containment =
        spectral_norm(at_x.basis - Pl * at_x.basis);
    areg.require(containment <= kLimitTol);
    areg.track_max("containment_residual_max", containment);

    // Probes: tangent vectors at X, and elements of the limit subspace.
    std::vector<std::pair<std::string, Matrix>> probes;
    for (int j = 0; j < 2; ++j)
      probes.emplace_back("tangent_at_x_" + std::to_string(j),
                          sample_cone_member(fx, {ConeKind::RegularTangent, p.r_low}, trng));
    for (int j = 0; j < 2; ++j) {
      const Vector c = trng.gaussian_matrix(limit.dim(), 1).col(0);
      probes.emplace_back("limit_space_" + std::to_string(j),
                          unvec_row_major(limit.basis * c, m, n));
    }
    for (const auto& [label, probe] : probes) {
      const std::string id = detail::probe_name(t, label);
      const auto prof = inner_residual_profile(frames, along, probe);
      const InnerCertificate c = certify_inner(prof, dist);
      rep.add_profile(id, prof);
      inner.probes.push_back(detail::probe_record(id, "lower-cone member", c, probe.norm()));
      inner.require(c.certified);
      inner.track_max("tail_max", c.tail_max);
    }

    const Matrix M = project_cone(coordinate_frame(m, n, p.r), along, trng.gaussian_matrix(m, n));
    const OuterCheck oc = outer_cluster_check(
        b, frames, along, [&](std::size_t i) { return embed_coefficients(b.frames[i], M); },
        std::min(m, n));
    bool in_limit = oc.sampler_violations == 0 && !oc.candidates.empty();
    for (const ClusterCandidate& cand : oc.candidates) {
      const double d = distance_to_subspace(limit, cand.value) / std::max(1.0, cand.value.norm());
      outer.track_max("candidate_distance_max", d);
      if (d > kLimitTol) in_limit = false;
    }
    outer.require(in_limit);

    const Matrix bad =
        f0.Uperp * trng.gaussian_matrix(m - p.r, n - p.r) * f0.Vperp.transpose();
    const std::string id = detail::probe_name(t, "normal_control");
    const auto prof = inner_residual_profile(frames, along, bad);
    const InnerCertificate c = certify_inner(prof, dist);
    rep.add_profile(id, prof);
    negative.probes.push_back(detail::probe_record(id, "random", c, bad.norm()));
    negative.require(!c.certified);
  }
  rep.clauses = {gap, areg, inner, outer, negative};
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

enum class PolarSequence { Constant, Dense, Zero };

inline const char* to_string(PolarSequence s) {
  switch (s) {
    case PolarSequence::Constant: return "constant";
    case PolarSequence::Dense: return "dense";
    case PolarSequence::Zero: return "zero";
  }
  return "constant";
}

struct PolarParams {
  PolarSequence sequence = PolarSequence::Dense;
  Index m = 4;
  Index n = 4;
  Index r_low = 1;
  Index r = 2;
  std::size_t N = 200;

  void validate() const {
    if (m < 1 || n < 1) fail(ErrorCode::InvalidParams, "require m, n >= 1");
    if (N < 8) fail(ErrorCode::InvalidParams, "require N >= 8");
    if (sequence == PolarSequence::Zero) return;
    if (r < 1 || r >= std::min(m, n)) fail(ErrorCode::InvalidParams, "require 1 ≤ r < min(m,n)");
    if (sequence == PolarSequence::Dense && (r_low < 1 || r_low >= r))
      fail(ErrorCode::InvalidParams, "require 1 ≤ r̲ < r");
  }
  json to_json() const {
    return {{"sequence", to_string(sequence)}, {"m", m}, {"n", n}, {"r_low", r_low}, {"r", r},
            {"N", N}};
  }
};

/// Polarity of set limits for the tangent spaces S_i along a sequence and
/// their polars (the normal spaces): members of the polar of the outer-limit
/// bound are inner limits of the polars, and cluster points of polar members
/// annihilate inner-certified primal probes.
inline LimitReport polar_limit_check(const PolarParams& p, std::size_t trials, RandomSource& rng) {
  p.validate();
  if (trials < 1) fail(ErrorCode::InvalidParams, "require trials >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  LimitReport rep;
  rep.suite = "polar";
  rep.params = p.to_json();
  rep.params["trials"] = trials;
  rep.seed = rng.seed();
  const Index m = p.m;
  const Index n = p.n;
  Clause polar_inner{"polar_inner_limit"}, annihilate{"polar_cluster_annihilation"};

  for (std::size_t t = 0; t < trials; ++t) {
    RandomSource trng = rng.derive(t);
    if (p.sequence == PolarSequence::Zero) {
      // S_i = {0}: the polars are the whole space, the only primal probe is 0.
      for (int j = 0; j < 2; ++j) {
        const std::vector<double> prof(p.N, 0.0);
        const InnerCertificate c = certify_inner(prof, std::vector<double>(p.N, 0.0));
        polar_inner.probes.push_back(
            detail::probe_record(detail::probe_name(t, "any_" + std::to_string(j)), "random", c,
                         trng.gaussian_matrix(m, n).norm()));
        polar_inner.require(c.certified);
      }
      const Matrix nu = trng.gaussian_matrix(m, n);
      const double pairing = std::abs((nu.array() * Matrix::Zero(m, n).array()).sum());
      annihilate.track_max("pairing_max", pairing);
      annihilate.require(pairing <= kLimitTol);
      continue;
    }

    const bool dense = p.sequence == PolarSequence::Dense;
    const Matrix X = random_rank_matrix(m, n, dense ? p.r_low : p.r, trng);
    const ConeFrame fx = cone_frame(X);
    SequenceBundle b;
    if (dense) {
      DenseClusterOptions opts;
      opts.anchors = {{fx.U_perp * haar_orthogonal(m - p.r_low, trng),
                       fx.V_perp * haar_orthogonal(n - p.r_low, trng)}};
      b = dense_cluster_sequence(X, p.r, p.N, trng, opts);
    } else {
      b = align_frames_constant_rank(X, std::vector<Matrix>(p.N, X));
    }
    const auto frames = bundle_frames(b);
    const auto dist = bundle_distances(b);
    const ConeSpec primal{ConeKind::RegularTangent, p.r};
    const ConeSpec polar{ConeKind::ClarkeNormal, p.r};

    // Polar of the outer-limit bound: the normal space at X for the constant
    // sequence; {0} for the dense one, whose outer limit contains a tangent
    // cone of a strictly larger rank.
    std::vector<Matrix> polar_probes{Matrix::Zero(m, n)};
    if (!dense)
      for (int j = 0; j < 2; ++j) polar_probes.push_back(sample_cone_member(fx, polar, trng));
    for (std::size_t j = 0; j < polar_probes.size(); ++j) {
      const std::string id = detail::probe_name(t, "polar_" + std::to_string(j));
      const auto prof = inner_residual_profile(frames, polar, polar_probes[j]);
      const InnerCertificate c = certify_inner(prof, dist);
      rep.add_profile(id, prof);
      polar_inner.probes.push_back(detail::probe_record(id, "lower-cone member", c, polar_probes[j].norm()));
      polar_inner.require(c.certified);
    }

    // Inner-certified primal probes: tangent vectors at X.
    std::vector<Matrix> primal_probes;
    for (int j = 0; j < 2; ++j) {
      const Matrix eta = sample_cone_member(fx, {ConeKind::RegularTangent, fx.r}, trng);
      const InnerCertificate c = certify_inner(inner_residual_profile(frames, primal, eta), dist);
      annihilate.require(c.certified);
      if (c.certified) primal_probes.push_back(eta);
    }
    const Matrix W = project_cone(coordinate_frame(m, n, p.r), polar, trng.gaussian_matrix(m, n));
    const OuterCheck oc = outer_cluster_check(
        b, frames, polar, [&](std::size_t i) { return embed_coefficients(b.frames[i], W); },
        std::min(m, n));
    annihilate.require(oc.sampler_violations == 0 && !oc.candidates.empty());
    for (const ClusterCandidate& cand : oc.candidates)
      for (const Matrix& eta : primal_probes) {
        const double pairing = std::abs((cand.value.array() * eta.array()).sum()) /
                               std::max(1e-300, cand.value.norm() * eta.norm());
        annihilate.track_max("pairing_max", pairing);
        annihilate.require(pairing <= kLimitTol);
      }
    annihilate.count("cluster_candidates", static_cast<int>(oc.candidates.size()));
  }
  rep.clauses = {polar_inner, annihilate};
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace lrcones
