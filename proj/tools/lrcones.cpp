// Command-line front end. Exit codes: 0 pass, 1 verification failure,
// 2 I/O, 3 invalid parameters, 4 domain-constraint violation.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lrcones/blockrank.hpp"
#include "lrcones/cones.hpp"
#include "lrcones/limits.hpp"
#include "lrcones/seqlab.hpp"
#include "lrcones/variety.hpp"

using namespace lrcones;

namespace {

enum Exit { kPass = 0, kVerifyFailed = 1, kIo = 2, kInvalid = 3, kDomain = 4 };

struct RunConfig {
  std::string input, eta, other, output;
  std::string format = "text";
  std::string kind = "tangent";
  std::string sequence;
  Index m = 4, n = 4, r_low = 1, r = 2, rbar = 2;
  Index k = 1, p = 2, q = 2, s = 1;
  std::size_t trials = 20, N = 200;
  std::uint64_t seed = 0;
  double tol = kConeTol;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return kIo;
    case ErrorCode::InvalidInput:
    case ErrorCode::InvalidRank:
    case ErrorCode::InvalidParams: return kInvalid;
    default: return kDomain;
  }
}

// A malformed or missing matrix file is an I/O failure naming the path.
Matrix read_input(const std::string& path, const char* flag) {
  if (path.empty()) fail(ErrorCode::InvalidParams, std::string("missing ") + flag);
  try {
    return load_matrix(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidInput)
      fail(ErrorCode::Io, "'" + path + "': " + e.what());
    throw;
  }
}

void emit_matrix(const RunConfig& cfg, const Matrix& M) {
  if (cfg.output.empty())
    std::cout << format_matrix(M);
  else
    save_matrix(cfg.output, M);
}

int cmd_distance(const RunConfig& cfg) {
  const Matrix X = read_input(cfg.input, "--input");
  const double d = distance_to_variety(X, cfg.r);
  const Vector tail = trailing_singular_values(X, cfg.r);
  if (cfg.format == "json") {
    json j = {{"distance", d}, {"r", cfg.r}};
    j["trailing_singular_values"] = std::vector<double>(tail.data(), tail.data() + tail.size());
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "distance " << num(d) << '\n' << "trailing_singular_values";
    for (Index i = 0; i < tail.size(); ++i) std::cout << ' ' << num(tail(i));
    std::cout << '\n';
  }
  return kPass;
}

ConeSpec spec_of(const RunConfig& cfg) { return {cone_kind_from_string(cfg.kind), cfg.rbar}; }

int cmd_project(const RunConfig& cfg) {
  const ConeFrame frame = cone_frame(read_input(cfg.input, "--input"));
  const Matrix eta = read_input(cfg.eta, "--eta");
  const ConeSpec spec = spec_of(cfg);
  const Matrix P = project_cone(frame, spec, eta);
  const double residual = cone_distance(frame, spec, eta);
  const bool member = cone_membership(frame, spec, eta, cfg.tol);
  if (cfg.format == "json") {
    json j = {{"cone", {{"kind", to_string(spec.kind)}, {"rbar", spec.rbar}}},
              {"residual", residual},
              {"member", member}};
    if (cfg.output.empty()) j["projection"] = format_matrix(P);
    std::cout << j.dump(2) << '\n';
    if (!cfg.output.empty()) save_matrix(cfg.output, P);
    return kPass;
  }
  std::cout << "residual " << num(residual) << '\n' << "member " << (member ? "true" : "false") << '\n';
  emit_matrix(cfg, P);
  return kPass;
}

int cmd_membership(const RunConfig& cfg) {
  const ConeFrame frame = cone_frame(read_input(cfg.input, "--input"));
  const Matrix eta = read_input(cfg.eta, "--eta");
  const ConeSpec spec = spec_of(cfg);
  const bool member = cone_membership(frame, spec, eta, cfg.tol);
  const double d = cone_distance(frame, spec, eta);
  if (cfg.format == "json")
    std::cout << json{{"member", member}, {"distance", d}}.dump(2) << '\n';
  else
    std::cout << "member " << (member ? "true" : "false") << '\n' << "distance " << num(d) << '\n';
  return kPass;
}

int cmd_frame(const RunConfig& cfg) {
  const ConeFrame f = cone_frame(read_input(cfg.input, "--input"), kRankTol);
  if (!cfg.output.empty()) {
    const std::filesystem::path dir(cfg.output);
    std::filesystem::create_directories(dir);
    save_matrix((dir / "U.txt").string(), f.U);
    save_matrix((dir / "U_perp.txt").string(), f.U_perp);
    save_matrix((dir / "V.txt").string(), f.V);
    save_matrix((dir / "V_perp.txt").string(), f.V_perp);
  }
  if (cfg.format == "json") {
    json j = {{"rank", f.r}};
    j["sigma"] = std::vector<double>(f.sigma.data(), f.sigma.data() + f.sigma.size());
    std::cout << j.dump(2) << '\n';
    return kPass;
  }
  std::cout << "rank " << f.r << '\n' << "sigma";
  for (Index i = 0; i < f.r; ++i) std::cout << ' ' << num(f.sigma(i));
  std::cout << '\n';
  if (cfg.output.empty()) {
    std::cout << "U\n" << format_matrix(f.U) << "U_perp\n" << format_matrix(f.U_perp);
    std::cout << "V\n" << format_matrix(f.V) << "V_perp\n" << format_matrix(f.V_perp);
  }
  return kPass;
}

int cmd_sequence(const RunConfig& cfg) {
  if (cfg.output.empty()) fail(ErrorCode::InvalidParams, "sequence: --output directory required");
  RandomSource rng(cfg.seed);
  Matrix X;
  if (!cfg.input.empty()) {
    X = read_input(cfg.input, "--input");
  } else {
    if (cfg.r_low < 1 || cfg.r_low > std::min(cfg.m, cfg.n))
      fail(ErrorCode::InvalidParams, "require 1 ≤ r̲ ≤ min(m,n)");
    X = random_rank_matrix(cfg.m, cfg.n, cfg.r_low, rng);
  }
  const std::string kind = cfg.sequence.empty() ? "dense" : cfg.sequence;
  SequenceBundle b;
  if (kind == "dense") {
    b = dense_cluster_sequence(X, cfg.r, cfg.N, rng);
  } else if (kind == "constant-frame") {
    DenseClusterOptions opts;
    opts.mode = FrameMode::Constant;
    b = dense_cluster_sequence(X, cfg.r, cfg.N, rng, opts);
  } else if (kind == "constant-rank") {
    b = align_frames_constant_rank(X, constant_rank_sequence(X, cfg.N, rng));
    b.seed = cfg.seed;
  } else {
    fail(ErrorCode::InvalidParams, "unknown sequence kind '" + kind + "'");
  }
  save_bundle(b, cfg.output);
  std::cout << "bundle " << cfg.output << " length " << b.size() << " r_low " << b.r_low
            << " r_seq " << b.r_seq << '\n';
  return kPass;
}

int cmd_witness(const RunConfig& cfg) {
  const BlockShape shape{cfg.k, cfg.p, cfg.q, cfg.s};
  const Matrix W = tight_witness(shape);
  const Index rank = exact_integer_rank(W);
  const Index d_rank = exact_integer_rank(corner_block(W, shape.k));
  if (cfg.format == "json") {
    std::cout << json{{"rank", rank}, {"d_rank", d_rank}, {"bound", rank_bound(shape)}}.dump(2)
              << '\n';
    if (!cfg.output.empty()) save_matrix(cfg.output, W);
    return kPass;
  }
  std::cout << "rank " << rank << '\n' << "d_rank " << d_rank << '\n';
  emit_matrix(cfg, W);
  return kPass;
}

int cmd_rotate(const RunConfig& cfg) {
  const Matrix M = read_input(cfg.input, "--input");
  const CornerRotation c = rotate_to_low_rank_corner(M, cfg.k, cfg.s);
  const double err = (c.U * c.Mprime * c.V.transpose() - M).norm();
  const Index corner = numerical_rank(corner_block(c.Mprime, cfg.k));
  if (!cfg.output.empty()) {
    save_matrix(cfg.output + "_U.txt", c.U);
    save_matrix(cfg.output + "_V.txt", c.V);
    save_matrix(cfg.output + "_Mprime.txt", c.Mprime);
  }
  std::cout << "reconstruction_error " << num(err) << '\n' << "corner_rank " << corner << '\n';
  if (cfg.output.empty()) std::cout << "Mprime\n" << format_matrix(c.Mprime);
  return kPass;
}

int cmd_gap(const RunConfig& cfg) {
  const Matrix A = read_input(cfg.input, "--input");
  const Matrix B = read_input(cfg.other, "--other");
  const double g = gap_distance(Subspace::span_of(A), Subspace::span_of(B));
  std::cout << "gap " << num(g) << '\n';
  return kPass;
}

int report_out(const RunConfig& cfg, const LimitReport& rep) {
  const std::string prefix = cfg.output.empty() ? "lrcones_" + rep.suite : cfg.output;
  write_report(rep, prefix + ".json", prefix + ".csv");
  if (cfg.format == "json") {
    std::cout << rep.to_json().dump(2) << '\n';
  } else {
    for (const Clause& c : rep.clauses) std::cout << c.name << ' ' << to_string(c.verdict) << '\n';
    std::cout << "report " << prefix << ".json\n";
  }
  return rep.passed() ? kPass : kVerifyFailed;
}

SuiteParams suite_params(const RunConfig& cfg) {
  return {cfg.m, cfg.n, cfg.r_low, cfg.r, cfg.rbar, cfg.trials, cfg.N};
}

int cmd_verify(const std::string& which, const RunConfig& cfg) {
  RandomSource rng(cfg.seed);
  if (which == "main") return report_out(cfg, verify_main_theorem(suite_params(cfg), rng));
  if (which == "regular-tangent")
    return report_out(cfg, verify_regular_tangent_limits(suite_params(cfg), rng));
  if (which == "normal") return report_out(cfg, verify_normal_cone_limits(suite_params(cfg), rng));
  if (which == "whitney")
    return report_out(cfg, whitney_a_regularity_check(
                               {cfg.m, cfg.n, cfg.r_low, cfg.r, cfg.trials, cfg.N}, rng));
  PolarParams pp;
  const std::string seq = cfg.sequence.empty() ? "dense" : cfg.sequence;
  if (seq == "dense")
    pp.sequence = PolarSequence::Dense;
  else if (seq == "constant")
    pp.sequence = PolarSequence::Constant;
  else if (seq == "zero")
    pp.sequence = PolarSequence::Zero;
  else
    fail(ErrorCode::InvalidParams, "unknown polar sequence '" + seq + "'");
  pp.m = cfg.m;
  pp.n = cfg.n;
  pp.r_low = cfg.r_low;
  pp.r = cfg.r;
  pp.N = cfg.N;
  return report_out(cfg, polar_limit_check(pp, cfg.trials, rng));
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("LOWRANK_CONES_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidParams, std::string("LOWRANK_CONES_SEED is not an integer: ") + s);
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Tangent and normal cones of bounded-rank matrices"};
  app.require_subcommand(1);

  auto io_flags = [&](CLI::App* c) {
    c->add_option("--input", cfg.input, "matrix file");
    c->add_option("--output", cfg.output, "output path");
    c->add_option("--format", cfg.format, "json|csv|text")
        ->check(CLI::IsMember({"json", "csv", "text"}));
  };
  auto cone_flags = [&](CLI::App* c) {
    c->add_option("--eta", cfg.eta, "direction matrix file");
    c->add_option("--kind", cfg.kind,
                  "tangent|regular_tangent|normal|regular_normal|clarke_normal");
    c->add_option("--rbar", cfg.rbar, "variety rank bound");
    c->add_option("--tol", cfg.tol, "membership tolerance");
  };
  auto dims = [&](CLI::App* c) {
    c->add_option("--m", cfg.m);
    c->add_option("--n", cfg.n);
    c->add_option("--rlow", cfg.r_low, "rank of the limit point");
    c->add_option("--r", cfg.r, "rank along the sequence");
    c->add_option("--N", cfg.N, "sequence length");
    c->add_option("--seed", cfg.seed);
  };

  auto* distance = app.add_subcommand("distance", "distance to the rank-r matrices");
  io_flags(distance);
  distance->add_option("--r", cfg.r)->required();

  auto* project = app.add_subcommand("project", "metric projection onto a cone");
  io_flags(project);
  cone_flags(project);
  auto* membership = app.add_subcommand("membership", "cone membership test");
  io_flags(membership);
  cone_flags(membership);
  auto* frame = app.add_subcommand("frame", "SVD frame of a matrix");
  io_flags(frame);
  frame->add_option("--tol", cfg.tol);

  auto* sequence = app.add_subcommand("sequence", "construct and save a sequence bundle");
  io_flags(sequence);
  dims(sequence);
  sequence->add_option("--sequence", cfg.sequence, "dense|constant-frame|constant-rank");

  auto* witness = app.add_subcommand("witness", "tight block-rank witness");
  io_flags(witness);
  witness->add_option("--k", cfg.k)->required();
  witness->add_option("--p", cfg.p)->required();
  witness->add_option("--q", cfg.q)->required();
  witness->add_option("--s", cfg.s)->required();

  auto* rotate = app.add_subcommand("rotate", "rotate a matrix to a low-rank corner");
  io_flags(rotate);
  rotate->add_option("--k", cfg.k)->required();
  rotate->add_option("--s", cfg.s)->required();

  auto* gap = app.add_subcommand("gap", "gap distance between column spans");
  io_flags(gap);
  gap->add_option("--other", cfg.other, "second matrix file");

  auto* verify = app.add_subcommand("verify", "limit verification suites");
  verify->require_subcommand(1);
  std::string which;
  for (const char* name : {"main", "regular-tangent", "normal", "whitney", "polar"}) {
    auto* sub = verify->add_subcommand(name);
    io_flags(sub);
    dims(sub);
    sub->add_option("--rbar", cfg.rbar);
    sub->add_option("--trials", cfg.trials);
    sub->add_option("--tol", cfg.tol);
    if (std::string(name) == "polar") sub->add_option("--sequence", cfg.sequence, "dense|constant|zero");
    sub->callback([&which, name] { which = name; });
  }

  try {
    if (auto s = env_seed()) cfg.seed = *s;
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kPass : kInvalid;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kPass : kInvalid;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }

  try {
    if (*distance) return cmd_distance(cfg);
    if (*project) return cmd_project(cfg);
    if (*membership) return cmd_membership(cfg);
    if (*frame) return cmd_frame(cfg);
    if (*sequence) return cmd_sequence(cfg);
    if (*witness) return cmd_witness(cfg);
    if (*rotate) return cmd_rotate(cfg);
    if (*gap) return cmd_gap(cfg);
    if (*verify) return cmd_verify(which, cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kInvalid;
}
