#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#ifndef LRCONES_CLI_PATH
#error "LRCONES_CLI_PATH must name the lrcones executable"
#endif

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;  // stdout and stderr together
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lrcones_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CliRun run(const std::string& args, const std::string& env = "") const {
    const std::string log = path("log.txt");
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" LRCONES_CLI_PATH "' " +
                            args + " > '" + log + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(log);
    return r;
  }

  fs::path dir_;
};

const char* kDiag321 = "3 3\n3 0 0\n0 2 0\n0 0 1\n";
const char* kE11 = "3 3\n1 0 0\n0 0 0\n0 0 0\n";
const char* kEta = "3 3\n1 2 0\n0 0 0\n0 0 2\n";

}  // namespace

TEST_F(Cli, DistanceToRankOne) {
  const CliRun r = run("distance --input " + write("x.txt", kDiag321) + " --r 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("distance 2.23606797749"), std::string::npos) << r.out;
}

TEST_F(Cli, DistanceJson) {
  const CliRun r = run("distance --input " + write("x.txt", kDiag321) + " --r 2 --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["distance"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, MissingFileIsIoError) {
  const CliRun r = run("distance --input missing.txt --r 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("missing.txt"), std::string::npos) << r.out;
}

TEST_F(Cli, MalformedFileIsIoError) {
  const CliRun r = run("distance --input " + write("bad.txt", "2 2\n1 x\n") + " --r 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.txt"), std::string::npos) << r.out;
}

TEST_F(Cli, ProjectNormalCone) {
  const CliRun r = run("project --input " + write("x.txt", kE11) + " --eta " + write("e.txt", kEta) +
                    " --kind normal --rbar 2 --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["residual"].get<double>(), std::sqrt(5.0), 1e-12);
  EXPECT_EQ(j["member"], false);
  EXPECT_EQ(j["cone"]["kind"], "normal");
}

TEST_F(Cli, ProjectRegularNormalBelowBoundIsZero) {
  const CliRun r = run("project --input " + write("x.txt", kE11) + " --eta " + write("e.txt", kEta) +
                    " --kind regular_normal --rbar 2 --output " + path("p.txt"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path("p.txt"));
  int rows = 0, cols = 0;
  in >> rows >> cols;
  EXPECT_EQ(rows, 3);
  double v = 0, sum = 0;
  while (in >> v) sum += std::abs(v);
  EXPECT_EQ(sum, 0.0);
}

TEST_F(Cli, ProjectRankAboveBoundFails) {
  const CliRun r = run("project --input " + write("x.txt", kDiag321) + " --eta " +
                    write("e.txt", kEta) + " --kind tangent --rbar 1");
  EXPECT_EQ(r.code, 4) << r.out;
}

TEST_F(Cli, Membership) {
  const CliRun r = run("membership --input " + write("x.txt", kE11) + " --eta " +
                    write("e.txt", kEta) + " --kind tangent --rbar 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("member true"), std::string::npos) << r.out;
}

TEST_F(Cli, WitnessRanks) {
  CliRun r = run("witness --k 1 --p 2 --q 2 --s 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rank 3"), std::string::npos) << r.out;
  r = run("witness --k 2 --p 3 --q 4 --s 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rank 5"), std::string::npos) << r.out;
  r = run("witness --k 1 --p 2 --q 2 --s 3");
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(Cli, SequenceWritesManifest) {
  const CliRun r = run("sequence --input " + write("x.txt", kE11) +
                    " --r 2 --N 12 --seed 3 --sequence dense --output " + path("bundle"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(path("bundle/manifest.json")));
  EXPECT_TRUE(fs::exists(path("bundle/X_0011.txt")));
}

TEST_F(Cli, VerifyMainAndWhitney) {
  CliRun r = run("verify main --m 4 --n 4 --rlow 1 --r 2 --rbar 2 --trials 2 --N 60 --seed 0 "
              "--output " + path("main"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(path("main.json")));
  EXPECT_TRUE(fs::exists(path("main.csv")));
  r = run("verify whitney --m 4 --n 4 --rlow 1 --r 2 --trials 2 --N 60 --output " + path("w"));
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(path("w.json")));
  EXPECT_EQ(j["suite"], "whitney");
  EXPECT_EQ(j["passed"], true);
}

TEST_F(Cli, VerifyDefaultPrefixAndSeedFromEnv) {
  const CliRun r = run("verify polar --trials 2 --N 40", "LOWRANK_CONES_SEED=17");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(path("lrcones_polar.json")));
  EXPECT_EQ(j["seed"], 17);
}

TEST_F(Cli, VerifyBadSeedEnv) {
  EXPECT_EQ(run("verify main --trials 1 --N 20", "LOWRANK_CONES_SEED=abc").code, 3);
}

TEST_F(Cli, VerifyRejectsRbarAtMinDimension) {
  const CliRun r = run("verify main --m 4 --n 4 --rlow 1 --r 2 --rbar 4 --output " + path("q"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("require r̄ < min(m,n)"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("distance --bogus 1").code, 3); }

TEST_F(Cli, ReportsReproducible) {
  const std::string args = "verify main --m 4 --n 4 --rlow 1 --r 2 --rbar 3 --trials 2 --N 60 --seed 5 --output ";
  ASSERT_EQ(run(args + path("a")).code, 0);
  ASSERT_EQ(run(args + path("b")).code, 0);
  auto a = nlohmann::json::parse(slurp(path("a.json")));
  auto b = nlohmann::json::parse(slurp(path("b.json")));
  a.erase("runtime_ms");
  b.erase("runtime_ms");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}
