#pragma once

// Matrix sequences X_i -> X together with frames of im X_i, im X_i^T and
// their complements that are aligned with a frame of the limit:
//
//   * constant rank: frames obtained by projecting the SVD frame of X onto
//     the column/row spaces of X_i;
//   * decreasing rank: X_i split into its best rank-r_low part and the rest,
//     with a subsequence along which the projectors onto the rest settle;
//   * dense cluster: X_i = X + sigma_low/(i+1) * Ubar_i Vbar_i^T with the
//     complement frames drawn Haar, optionally interleaved with fixed anchor
//     frames so that those frames are exact cluster points;
//   * the lift of a tangent vector at X to tangent vectors at X_i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lrcones/cones.hpp"
#include "lrcones/matcore.hpp"
#include "lrcones/variety.hpp"

namespace lrcones {

enum class Provenance { ConstantRank, DecreasingRank, DenseCluster, PlantedConstantFrame };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ConstantRank: return "constant_rank_alignment";
    case Provenance::DecreasingRank: return "decreasing_rank_split";
    case Provenance::DenseCluster: return "dense_cluster";
    case Provenance::PlantedConstantFrame: return "planted_constant_frame";
  }
  return "unknown";
}

inline Provenance provenance_from_string(const std::string& s) {
  for (Provenance p : {Provenance::ConstantRank, Provenance::DecreasingRank,
                       Provenance::DenseCluster, Provenance::PlantedConstantFrame})
    if (s == to_string(p)) return p;
  fail(ErrorCode::InvalidInput, "unknown bundle provenance '" + s + "'");
}

/// Frames at one index. Column counts: U, V have r_low columns, Ubar, Vbar
/// have r_seq - r_low, Uperp has m - r_seq and Vperp n - r_seq. They are
/// full-rank but not necessarily orthonormal.
struct IndexFrames {
  Matrix U, Ubar, Uperp;
  Matrix V, Vbar, Vperp;

  Matrix left() const {
    Matrix out(U.rows(), U.cols() + Ubar.cols() + Uperp.cols());
    out << U, Ubar, Uperp;
    return out;
  }
  Matrix right() const {
    Matrix out(V.rows(), V.cols() + Vbar.cols() + Vperp.cols());
    out << V, Vbar, Vperp;
    return out;
  }
};

struct SequenceBundle {
  std::vector<Matrix> X_seq;
  Matrix target;
  Index r_low = 0;
  Index r_seq = 0;
  std::vector<IndexFrames> frames;
  std::vector<std::size_t> subsequence;
  // Limit frames of the settled subsequence (decreasing-rank bundles).
  Matrix Ubar_limit, Vbar_limit;
  // Anchor index used at each position, -1 for a Haar draw (dense bundles).
  std::vector<int> anchor_of_index;
  Provenance provenance = Provenance::ConstantRank;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return X_seq.size(); }
  Index m() const { return target.rows(); }
  Index n() const { return target.cols(); }
};

struct LiftedVectorSequence {
  Matrix eta;
  std::vector<Matrix> eta_seq;
};

namespace detail {

struct ThinSplit {
  Matrix U_low, U_rest, U_perp;
  Matrix V_low, V_rest, V_perp;
};

// Orthonormal bases from the full SVD of Y: the leading `low` singular
// directions, the next `rest`, and the remaining complement.
inline ThinSplit split_frames(const Matrix& Y, Index low, Index rest) {
  const FullSvd f = full_svd(Y);
  ThinSplit s;
  s.U_low = f.U.leftCols(low);
  s.U_rest = f.U.middleCols(low, rest);
  s.U_perp = f.U.rightCols(Y.rows() - low - rest);
  s.V_low = f.V.leftCols(low);
  s.V_rest = f.V.middleCols(low, rest);
  s.V_perp = f.V.rightCols(Y.cols() - low - rest);
  return s;
}

// Projection of `reference` by P, accepted when it stays within distance 1
// of the reference (then it has full column rank).
inline std::optional<Matrix> projected_frame(const Matrix& P, const Matrix& reference) {
  Matrix out = P * reference;
  if ((out - reference).norm() < 1.0) return out;
  return std::nullopt;
}

inline double projector_distance(const Matrix& P, const Matrix& Q) {
  return spectral_norm(P - Q);
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Frames along a constant-rank sequence: U_i = X_i X_i^+ U,
/// U_i_perp = (I - X_i X_i^+) U_perp and likewise on the right. Indices where
/// a projected frame leaves the unit ball around the target frame fall back
/// to the SVD frame of X_i.
inline SequenceBundle align_frames_constant_rank(const Matrix& X, const std::vector<Matrix>& X_seq,
                                                 double tol = kRankTol) {
  const ConeFrame target = cone_frame(X, tol);
  const Index r = target.r;
  const Index m = X.rows();
  const Index n = X.cols();
  SequenceBundle b;
  b.target = X;
  b.r_low = r;
  b.r_seq = r;
  b.provenance = Provenance::ConstantRank;
  b.X_seq = X_seq;
  b.frames.reserve(X_seq.size());
  for (std::size_t i = 0; i < X_seq.size(); ++i) {
    const Matrix& Xi = X_seq[i];
    if (Xi.rows() != m || Xi.cols() != n)
      fail(ErrorCode::InvalidInput, "align_frames_constant_rank: shape mismatch at index " +
                                        std::to_string(i));
    const detail::ThinSplit s = detail::split_frames(Xi, r, 0);
    if (count_rank(full_svd(Xi).sigma, tol) != r)
      fail(ErrorCode::RankMismatch, "align_frames_constant_rank: X_" + std::to_string(i) +
                                        " does not have rank " + std::to_string(r));
    const Matrix P = s.U_low * s.U_low.transpose();
    const Matrix Q = s.V_low * s.V_low.transpose();
    const auto U = detail::projected_frame(P, target.U);
    const auto Uperp = detail::projected_frame(Matrix::Identity(m, m) - P, target.U_perp);
    const auto V = detail::projected_frame(Q, target.V);
    const auto Vperp = detail::projected_frame(Matrix::Identity(n, n) - Q, target.V_perp);
    IndexFrames f;
    if (U && Uperp && V && Vperp) {
      f = {*U, Matrix(m, 0), *Uperp, *V, Matrix(n, 0), *Vperp};
    } else {
      f = {s.U_low, Matrix(m, 0), s.U_perp, s.V_low, Matrix(n, 0), s.V_perp};
    }
    b.frames.push_back(std::move(f));
  }
  return b;
}

struct SubsequenceOptions {
  /// Projector pairs within this spectral distance of the candidate join it.
  double cluster_tol = 1e-4;
  /// Minimum subsequence length; 1 accepts a single settled index, which is
  /// the only option for sequences whose projectors never repeat.
  std::size_t min_length = 2;
};

/// Splitting X_i = Xlow_i + Xrest_i with Xlow_i the best rank-r_low
/// approximation, and frames aligned with the target as far as the finite
/// sequence allows. The settled subsequence is found greedily: scanning
/// candidates from the last index backwards, the first whose projector pair
/// (Xrest Xrest^+, Xrest^+ Xrest) is shared, within cluster_tol, by at least
/// min_length indices defines the subsequence.
inline SequenceBundle split_and_align_decreasing_rank(const Matrix& X,
                                                      const std::vector<Matrix>& X_seq,
                                                      SubsequenceOptions opts = {},
                                                      double tol = kRankTol) {
  if (X_seq.empty()) fail(ErrorCode::InvalidInput, "split_and_align: empty sequence");
  const ConeFrame target = cone_frame(X, tol);
  const Index r_low = target.r;
  const Index m = X.rows();
  const Index n = X.cols();
  const Index r = numerical_rank(X_seq.front(), tol);
  if (r <= r_low)
    fail(ErrorCode::RankMismatch, "split_and_align: sequence rank must exceed rank of the limit");

  std::vector<detail::ThinSplit> splits;
  std::vector<Matrix> P_rest, Q_rest;
  splits.reserve(X_seq.size());
  for (std::size_t i = 0; i < X_seq.size(); ++i) {
    const Matrix& Xi = X_seq[i];
    if (Xi.rows() != m || Xi.cols() != n)
      fail(ErrorCode::InvalidInput, "split_and_align: shape mismatch at index " + std::to_string(i));
    if (numerical_rank(Xi, tol) != r)
      fail(ErrorCode::RankMismatch, "split_and_align: X_" + std::to_string(i) +
                                        " does not have rank " + std::to_string(r));
    splits.push_back(detail::split_frames(Xi, r_low, r - r_low));
    P_rest.push_back(splits.back().U_rest * splits.back().U_rest.transpose());
    Q_rest.push_back(splits.back().V_rest * splits.back().V_rest.transpose());
  }

  const std::size_t N = X_seq.size();
  std::vector<std::size_t> subsequence;
  std::size_t candidate = N;
  for (std::size_t j = N; j-- > 0;) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i <= j; ++i) {
      const double d = detail::projector_distance(P_rest[i], P_rest[j]) +
                       detail::projector_distance(Q_rest[i], Q_rest[j]);
      if (d <= opts.cluster_tol) members.push_back(i);
    }
    if (members.size() >= std::max<std::size_t>(opts.min_length, 1)) {
      subsequence = std::move(members);
      candidate = j;
      break;
    }
  }
  if (candidate == N)
    fail(ErrorCode::NoConvergentSubsequence,
         "split_and_align: no projector cluster of length " + std::to_string(opts.min_length) +
             " within tolerance " + std::to_string(opts.cluster_tol));

  // Limit frames: the settled projectors' ranges, projected onto the
  // complements of im X and im X^T and re-orthonormalized.
  const Matrix comp_U = target.U_perp * target.U_perp.transpose();
  const Matrix comp_V = target.V_perp * target.V_perp.transpose();
  SequenceBundle b;
  b.Ubar_limit = range_basis(comp_U * splits[candidate].U_rest);
  b.Vbar_limit = range_basis(comp_V * splits[candidate].V_rest);
  if (b.Ubar_limit.cols() != r - r_low || b.Vbar_limit.cols() != r - r_low)
    fail(ErrorCode::NoConvergentSubsequence, "split_and_align: settled frame degenerates");
  Matrix UUbar(m, r);
  UUbar << target.U, b.Ubar_limit;
  Matrix VVbar(n, r);
  VVbar << target.V, b.Vbar_limit;
  const Matrix U_perp_limit = orth_complement(UUbar);
  const Matrix V_perp_limit = orth_complement(VVbar);

  std::vector<bool> in_subsequence(N, false);
  for (std::size_t i : subsequence) in_subsequence[i] = true;

  b.target = X;
  b.r_low = r_low;
  b.r_seq = r;
  b.provenance = Provenance::DecreasingRank;
  b.X_seq = X_seq;
  b.subsequence = subsequence;
  b.frames.reserve(N);
  const Matrix Im = Matrix::Identity(m, m);
  const Matrix In = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < N; ++i) {
    const detail::ThinSplit& s = splits[i];
    const Matrix P_low = s.U_low * s.U_low.transpose();
    const Matrix Q_low = s.V_low * s.V_low.transpose();
    IndexFrames f;
    const auto U = detail::projected_frame(P_low, target.U);
    const auto V = detail::projected_frame(Q_low, target.V);
    f.U = U && V ? *U : s.U_low;
    f.V = U && V ? *V : s.V_low;
    f.Ubar = s.U_rest;
    f.Vbar = s.V_rest;
    f.Uperp = s.U_perp;
    f.Vperp = s.V_perp;
    if (in_subsequence[i]) {
      const auto Ubar = detail::projected_frame(P_rest[i], b.Ubar_limit);
      const auto Vbar = detail::projected_frame(Q_rest[i], b.Vbar_limit);
      const auto Uperp = detail::projected_frame(Im - P_low - P_rest[i], U_perp_limit);
      const auto Vperp = detail::projected_frame(In - Q_low - Q_rest[i], V_perp_limit);
      if (Ubar && Vbar && Uperp && Vperp) {
        f.Ubar = *Ubar;
        f.Vbar = *Vbar;
        f.Uperp = *Uperp;
        f.Vperp = *Vperp;
      }
    }
    b.frames.push_back(std::move(f));
  }
  return b;
}

/// Complement frames planted at fixed indices of a dense-cluster sequence.
/// Both are column-orthonormal and span the complements of im X and im X^T.
struct AnchorFrame {
  Matrix U;  // m x (m - r_low)
  Matrix V;  // n x (n - r_low)
};

enum class FrameMode { Haar, Constant };

struct DenseClusterOptions {
  FrameMode mode = FrameMode::Haar;
  /// With A anchors, index i uses anchor (i mod (A+1)) - 1 and a fresh Haar
  /// draw when i mod (A+1) == 0, so every anchor recurs along a subsequence.
  std::vector<AnchorFrame> anchors;
};

/// X_i = X + sigma_low/(i+1) * Ubar_i Vbar_i^T where [Ubar_i U_i_perp] and
/// [Vbar_i V_i_perp] are orthonormal bases of the complements of im X and
/// im X^T. Frame draws use one RNG stream per index.
inline SequenceBundle dense_cluster_sequence(const Matrix& X, Index r, std::size_t N,
                                             RandomSource& rng, DenseClusterOptions opts = {},
                                             double tol = kRankTol) {
  const ConeFrame target = cone_frame(X, tol);
  const Index r_low = target.r;
  const Index m = X.rows();
  const Index n = X.cols();
  if (r <= r_low)
    fail(ErrorCode::InvalidParams, "dense_cluster_sequence: require rank(X) < r");
  if (r - r_low > std::min(m, n) - r_low)
    fail(ErrorCode::BudgetExceeded, "dense_cluster_sequence: r - r_low exceeds min(m,n) - r_low");
  for (const AnchorFrame& a : opts.anchors) {
    if (a.U.rows() != m || a.U.cols() != m - r_low || a.V.rows() != n || a.V.cols() != n - r_low)
      fail(ErrorCode::InvalidInput, "dense_cluster_sequence: anchor frame has wrong shape");
    if (orthonormality_residual(a.U) > 1e-8 || orthonormality_residual(a.V) > 1e-8 ||
        (target.U.transpose() * a.U).norm() > 1e-8 || (target.V.transpose() * a.V).norm() > 1e-8)
      fail(ErrorCode::InvalidInput,
           "dense_cluster_sequence: anchor frame is not an orthonormal complement basis");
  }
  const double scale = r_low > 0 ? target.sigma(r_low - 1) : 1.0;
  const Index k = r - r_low;
  const RandomSource streams(rng.next_u64());

  SequenceBundle b;
  b.target = X;
  b.r_low = r_low;
  b.r_seq = r;
  b.provenance =
      opts.mode == FrameMode::Constant ? Provenance::PlantedConstantFrame : Provenance::DenseCluster;
  b.seed = rng.seed();
  b.X_seq.reserve(N);
  b.frames.reserve(N);
  b.anchor_of_index.reserve(N);

  auto haar_frame = [&](std::uint64_t stream) {
    RandomSource local = streams.derive(stream);
    AnchorFrame f;
    f.U = target.U_perp * haar_orthogonal(m - r_low, local);
    f.V = target.V_perp * haar_orthogonal(n - r_low, local);
    return f;
  };
  const AnchorFrame constant_frame = haar_frame(0);
  const std::size_t period = opts.anchors.size() + 1;

  for (std::size_t i = 0; i < N; ++i) {
    int anchor = -1;
    AnchorFrame fr;
    if (opts.mode == FrameMode::Constant) {
      fr = constant_frame;
    } else if (i % period != 0) {
      anchor = static_cast<int>(i % period) - 1;
      fr = opts.anchors[static_cast<std::size_t>(anchor)];
    } else {
      fr = haar_frame(i);
    }
    IndexFrames f;
    f.U = target.U;
    f.V = target.V;
    f.Ubar = fr.U.leftCols(k);
    f.Uperp = fr.U.rightCols(m - r);
    f.Vbar = fr.V.leftCols(k);
    f.Vperp = fr.V.rightCols(n - r);
    b.X_seq.push_back(X + (scale / static_cast<double>(i + 1)) * f.Ubar * f.Vbar.transpose());
    b.frames.push_back(std::move(f));
    b.anchor_of_index.push_back(anchor);
  }
  return b;
}

/// Indices of a dense bundle that carry the given anchor.
inline std::vector<std::size_t> anchor_indices(const SequenceBundle& b, int anchor) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < b.anchor_of_index.size(); ++i)
    if (b.anchor_of_index[i] == anchor) out.push_back(i);
  return out;
}

/// For each reference complement frame pair, the distance to the nearest
/// sampled pair measured on the spans that define X_i:
/// sqrt(||P(Ubar_i) - P(Ubar_ref)||^2 + ||P(Vbar_i) - P(Vbar_ref)||^2) with
/// P the orthogonal projector, Ubar_ref the leading r_seq - r_low columns.
inline std::vector<double> frame_coverage(const SequenceBundle& b,
                                          const std::vector<AnchorFrame>& references) {
  const Index k = b.r_seq - b.r_low;
  std::vector<double> out;
  out.reserve(references.size());
  for (const AnchorFrame& ref : references) {
    const Matrix PU = ref.U.leftCols(k) * ref.U.leftCols(k).transpose();
    const Matrix PV = ref.V.leftCols(k) * ref.V.leftCols(k).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (const IndexFrames& f : b.frames) {
      const double d = std::sqrt((f.Ubar * f.Ubar.transpose() - PU).squaredNorm() +
                                 (f.Vbar * f.Vbar.transpose() - PV).squaredNorm());
      best = std::min(best, d);
    }
    out.push_back(best);
  }
  return out;
}

/// Rank-preserving sequence X_i = (U + t_i G) Sigma (V + t_i H)^T converging
/// to X, with t_i decreasing geometrically from t_first to t_last.
inline std::vector<Matrix> constant_rank_sequence(const Matrix& X, std::size_t N, RandomSource& rng,
                                                  double t_first = 0.5, double t_last = 1e-10,
                                                  double tol = kRankTol) {
  const ConeFrame fr = cone_frame(X, tol);
  const Matrix G = 0.3 * rng.gaussian_matrix(X.rows(), fr.r);
  const Matrix H = 0.3 * rng.gaussian_matrix(X.cols(), fr.r);
  const Matrix S = fr.sigma.asDiagonal();
  std::vector<Matrix> out;
  out.reserve(N);
  const double ratio = N > 1 ? std::pow(t_last / t_first, 1.0 / static_cast<double>(N - 1)) : 1.0;
  double t = t_first;
  for (std::size_t i = 0; i < N; ++i) {
    out.push_back((fr.U + t * G) * S * (fr.V + t * H).transpose());
    t *= ratio;
  }
  return out;
}

/// Lift of eta in T_{<= rbar - r + r_low}(X) to eta_i in T_{<= rbar}(X_i):
/// eta_i = [U_i U_i_perp] [A B; C D] [V_i V_i_perp]^T where the blocks are
/// those of eta in the SVD frame of X and the frames are those of the best
/// rank-r_low approximation of X_i, aligned by projection.
inline LiftedVectorSequence lift_tangent_vector(const SequenceBundle& bundle, Index rbar,
                                                const Matrix& eta, double tol = kRankTol) {
  const ConeFrame target = cone_frame(bundle.target, tol);
  const Index r_low = target.r;
  const Index r = bundle.r_seq;
  const Index m = bundle.m();
  const Index n = bundle.n();
  if (rbar < r)
    fail(ErrorCode::InvalidParams, "lift_tangent_vector: require rbar >= rank of the sequence");
  const Index lower = rbar - r + r_low;
  if (lower < 1)
    fail(ErrorCode::InvalidParams, "lift_tangent_vector: lower budget rbar - r + r_low must be >= 1");
  if (!cone_membership(target, {ConeKind::Tangent, lower}, eta))
    fail(ErrorCode::NotInCone, "lift_tangent_vector: eta is not in T_{<= rbar - r + r_low}(X)");
  const BlockDecomposition blocks = decompose(target, eta);
  Matrix core(m, n);
  core << blocks.A, blocks.B, blocks.C, blocks.D;

  LiftedVectorSequence out;
  out.eta = eta;
  out.eta_seq.reserve(bundle.size());
  const Matrix Im = Matrix::Identity(m, m);
  const Matrix In = Matrix::Identity(n, n);
  for (const Matrix& Xi : bundle.X_seq) {
    const detail::ThinSplit s = detail::split_frames(Xi, r_low, 0);
    const Matrix P = s.U_low * s.U_low.transpose();
    const Matrix Q = s.V_low * s.V_low.transpose();
    const auto U = detail::projected_frame(P, target.U);
    const auto Up = detail::projected_frame(Im - P, target.U_perp);
    const auto V = detail::projected_frame(Q, target.V);
    const auto Vp = detail::projected_frame(In - Q, target.V_perp);
    Matrix left(m, m);
    Matrix right(n, n);
    if (U && Up && V && Vp) {
      left << *U, *Up;
      right << *V, *Vp;
    } else {
      left << s.U_low, s.U_perp;
      right << s.V_low, s.V_perp;
    }
    out.eta_seq.push_back(left * core * right.transpose());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle files: manifest.json plus one matrix text file per element and
// per-index left/right frames.

inline void save_bundle(const SequenceBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create bundle directory '" + dir.string() + "'");
  nlohmann::json manifest;
  manifest["dimensions"] = {{"m", b.m()}, {"n", b.n()}};
  manifest["ranks"] = {{"r_low", b.r_low}, {"r_seq", b.r_seq}};
  manifest["provenance"] = to_string(b.provenance);
  manifest["seed"] = b.seed ? nlohmann::json(*b.seed) : nlohmann::json(nullptr);
  manifest["length"] = b.size();
  manifest["target"] = "target.txt";
  manifest["subsequence"] = b.subsequence;
  save_matrix((dir / "target.txt").string(), b.target);
  nlohmann::json elements = nlohmann::json::array();
  for (std::size_t i = 0; i < b.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu", i);
    const std::string xs = std::string("X_") + name + ".txt";
    const std::string ls = std::string("left_") + name + ".txt";
    const std::string rs = std::string("right_") + name + ".txt";
    save_matrix((dir / xs).string(), b.X_seq[i]);
    save_matrix((dir / ls).string(), b.frames[i].left());
    save_matrix((dir / rs).string(), b.frames[i].right());
    nlohmann::json e = {{"index", i}, {"X", xs}, {"left_frame", ls}, {"right_frame", rs}};
    if (!b.anchor_of_index.empty()) e["anchor"] = b.anchor_of_index[i];
    elements.push_back(e);
  }
  manifest["elements"] = elements;
  std::ofstream out(dir / "manifest.json");
  if (!out) fail(ErrorCode::Io, "cannot write bundle manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

inline SequenceBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) fail(ErrorCode::Io, "cannot open '" + (dir / "manifest.json").string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("bundle manifest: ") + e.what());
  }
  SequenceBundle b;
  b.r_low = manifest.at("ranks").at("r_low").get<Index>();
  b.r_seq = manifest.at("ranks").at("r_seq").get<Index>();
  b.provenance = provenance_from_string(manifest.at("provenance").get<std::string>());
  if (!manifest.at("seed").is_null()) b.seed = manifest.at("seed").get<std::uint64_t>();
  b.subsequence = manifest.at("subsequence").get<std::vector<std::size_t>>();
  b.target = load_matrix((dir / manifest.at("target").get<std::string>()).string());
  const Index m = b.target.rows();
  const Index n = b.target.cols();
  const Index k = b.r_seq - b.r_low;
  for (const auto& e : manifest.at("elements")) {
    b.X_seq.push_back(load_matrix((dir / e.at("X").get<std::string>()).string()));
    const Matrix L = load_matrix((dir / e.at("left_frame").get<std::string>()).string());
    const Matrix R = load_matrix((dir / e.at("right_frame").get<std::string>()).string());
    if (L.rows() != m || L.cols() != m || R.rows() != n || R.cols() != n)
      fail(ErrorCode::InvalidInput, "bundle: frame file has wrong shape");
    IndexFrames f;
    f.U = L.leftCols(b.r_low);
    f.Ubar = L.middleCols(b.r_low, k);
    f.Uperp = L.rightCols(m - b.r_seq);
    f.V = R.leftCols(b.r_low);
    f.Vbar = R.middleCols(b.r_low, k);
    f.Vperp = R.rightCols(n - b.r_seq);
    b.frames.push_back(std::move(f));
    if (e.contains("anchor")) b.anchor_of_index.push_back(e.at("anchor").get<int>());
  }
  return b;
}

}  // namespace lrcones
