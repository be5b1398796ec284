#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string output;  // stdout and stderr together
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(GWPI_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gwpi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateIsReproducible) {
  const std::string args = " simulate --seed 42 --n 40 --replicates 1000 --u 0.25,0.5 --out ";
  ASSERT_EQ(run_cli(args + path("a")).exit_code, 0);
  ASSERT_EQ(run_cli(args + path("b") + " --threads 3").exit_code, 0);
  EXPECT_EQ(slurp(path("a/report.json")), slurp(path("b/report.json")));
  EXPECT_EQ(slurp(path("a/report.csv")), slurp(path("b/report.csv")));
  EXPECT_TRUE(fs::exists(path("a/timing.json")));
  const auto report = nlohmann::json::parse(slurp(path("a/report.json")));
  EXPECT_EQ(report["version"], "gwpi-report/1");
  EXPECT_EQ(report["seed"], 42);
  EXPECT_EQ(report["n"], 40);
}

TEST_F(Cli, SimulateSingleCutSmokeRun) {
  const auto r = run_cli("simulate --n 256 --replicates 20000 --u 0.5 --out " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto report = nlohmann::json::parse(slurp(path("out/report.json")));
  int windows = 0;
  for (const auto& t : report["targets"]) {
    if (t["name"] == "window_ratio") {
      ++windows;
      EXPECT_DOUBLE_EQ(t["u"].get<double>(), 0.5);
      EXPECT_EQ(t["k"], 128);
      const double v = t["value"].get<double>();
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  EXPECT_EQ(windows, 1);
}

TEST_F(Cli, SimulateWithBaseline) {
  const auto r = run_cli("simulate --n 32 --replicates 500 --u 0.5 --baseline-replicates 2000 --out " +
                         path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(path("out/baseline.json")));
}

TEST_F(Cli, SupercriticalConfigIsRejected) {
  write("bad.json", R"({"offspring": [0.3, 0.3, 0.4]})");
  const auto r = run_cli("simulate --config " + path("bad.json") + " --out " + path("out"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("NotCritical"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(path("out/report.json")));
}

TEST_F(Cli, MalformedConfigReportsPosition) {
  write("broken.json", "{\n  \"n\": 12,\n  \"seed\": ,\n}\n");
  const auto r = run_cli("simulate --config " + path("broken.json"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
}

TEST_F(Cli, ExactOneGeneration) {
  const auto r = run_cli("exact --n 1 --out " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto golden = nlohmann::json::parse(slurp(path("out/golden.json")));
  EXPECT_NEAR(golden["targets"]["P(X_n<inf|Z_n>1)"].get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(golden["single_clan_bound"][1].get<double>(),
              golden["targets"]["P(single surviving clan)"].get<double>(), 1e-15);
}

TEST_F(Cli, ExactGeometricSurvivalTable) {
  std::ostringstream pmf;
  pmf << "[";
  double mass = 1.0;
  for (int j = 0; j < 200; ++j) {
    pmf << (j ? "," : "") << nlohmann::json(std::ldexp(1.0, -(j + 1))).dump();
    mass -= std::ldexp(1.0, -(j + 1));
  }
  pmf << "," << nlohmann::json(mass).dump() << "]";
  write("geo.json", R"({"offspring": )" + pmf.str() + R"(, "immigration": [0.5, 0.5]})");
  const auto r = run_cli("exact --n 1 --config " + path("geo.json") + " --out " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto golden = nlohmann::json::parse(slurp(path("out/golden.json")));
  const auto& q = golden["survival"];
  ASSERT_EQ(q.size(), 101u);
  for (std::size_t n = 0; n < q.size(); ++n) {
    EXPECT_NEAR(q[n].get<double>(), 1.0 / (n + 1.0), 1e-12) << n;
  }
}

TEST_F(Cli, ExactHistoryCapExitsWithResourceCode) {
  write("cap.json", R"({"history_cap": 50})");
  const auto r = run_cli("exact --n 3 --config " + path("cap.json") + " --out " + path("out"));
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST_F(Cli, LimitTableIsReproducibleAndHasTau) {
  const std::string args = " limit --seed 5 --u 0.5 --draws 20000 --out ";
  ASSERT_EQ(run_cli(args + path("a")).exit_code, 0);
  ASSERT_EQ(run_cli(args + path("b")).exit_code, 0);
  EXPECT_EQ(slurp(path("a/limits.json")), slurp(path("b/limits.json")));
  const auto limits = nlohmann::json::parse(slurp(path("a/limits.json")));
  ASSERT_EQ(limits["rows"].size(), 1u);
  EXPECT_DOUBLE_EQ(limits["rows"][0]["tau"].get<double>(), 0.5);
  const auto& trunc = limits["truncation"];
  EXPECT_LE(std::abs(trunc["half_epsilon_sum_shift"].get<double>()),
            trunc["sum_bias_bound"].get<double>());
}

TEST_F(Cli, CompareExitCodes) {
  ASSERT_EQ(run_cli("simulate --n 256 --replicates 3000 --out " + path("sim")).exit_code, 0);
  ASSERT_EQ(run_cli("limit --draws 50000 --out " + path("lim")).exit_code, 0);
  const std::string inputs = " --report " + path("sim/report.json") + " --limits " + path("lim/limits.json");

  const auto ok = run_cli("compare" + inputs + " --out " + path("cmp"));
  EXPECT_EQ(ok.exit_code, 0) << ok.output;
  EXPECT_TRUE(fs::exists(path("cmp/comparison.json")));
  EXPECT_TRUE(fs::exists(path("cmp/comparison.csv")));

  auto limits = nlohmann::json::parse(slurp(path("lim/limits.json")));
  limits["rows"][0]["pairwise"]["estimate"] = 0.9;
  write("off.json", limits.dump());
  const auto off = run_cli("compare --report " + path("sim/report.json") + " --limits " +
                           path("off.json") + " --out " + path("cmp2"));
  EXPECT_EQ(off.exit_code, 1) << off.output;

  write("other.json", R"({"offspring": [0.25, 0.5, 0.25], "immigration": [0.5, 0.5]})");
  ASSERT_EQ(run_cli("limit --draws 2000 --config " + path("other.json") + " --out " + path("lim2"))
                .exit_code,
            0);
  const auto mismatch = run_cli("compare --report " + path("sim/report.json") + " --limits " +
                                path("lim2/limits.json") + " --out " + path("cmp3"));
  EXPECT_EQ(mismatch.exit_code, 2) << mismatch.output;
}

TEST_F(Cli, SweepWritesOneRowPerN) {
  write("grid.json", R"({"n_grid": [8, 16], "replicates": 500, "u_grid": [0.5]})");
  const auto r = run_cli("sweep --config " + path("grid.json") + " --out " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto sweep = nlohmann::json::parse(slurp(path("out/sweep.json")));
  EXPECT_EQ(sweep["rows"].size(), 2u);
}
