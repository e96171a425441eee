#include "ddspc/scenario.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace ddspc {
namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + DDSPC_CLI + std::string(" ") + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("ddspc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Cli, ShortRecordReportsRequiredOrder) {
  const fs::path dir = scratch("short");
  const CliResult r = run_cli("collect --preset scalar-gaussian --T 10 --out-dir " + dir.string());
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("required order 26"), std::string::npos) << r.output;
}

TEST(Cli, SolveOcpIsByteIdentical) {
  const fs::path a = scratch("solve_a");
  const fs::path b = scratch("solve_b");
  const CliResult ra = run_cli("solve-ocp --preset scalar-gaussian --seed 3 --out-dir " + a.string());
  ASSERT_EQ(ra.code, 0) << ra.output;
  const CliResult col = run_cli("collect --preset scalar-gaussian --seed 3", "DDSPC_OUT_DIR=" + b.string());
  ASSERT_EQ(col.code, 0) << col.output;
  ASSERT_TRUE(fs::exists(b / "data.json"));
  const CliResult rb = run_cli("solve-ocp --preset scalar --seed 3 --data " +
                               (b / "data.json").string() + " --out-dir " + b.string());
  ASSERT_EQ(rb.code, 0) << rb.output;
  for (const char* f : {"solution.csv", "summary.csv", "report.json"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(a / "summary.csv").rfind("step,role,component,mean,variance\n", 0), 0u);
}

TEST(Cli, PrintPresetRoundTrips) {
  const CliResult r = run_cli("solve-ocp --preset aircraft --print-preset");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("# aircraft example"), std::string::npos) << r.output;
  const ScenarioConfig back = parse_scenario(r.output);
  EXPECT_EQ(back.A, preset("aircraft").A);
}

TEST(Cli, ConfigErrorsNameLineAndField) {
  const fs::path dir = scratch("badcfg");
  {
    std::ofstream f(dir / "bad.yaml");
    f << "preset: scalar\nocp:\n  eps_x: 3\n";
  }
  const CliResult r = run_cli("solve-ocp --config " + (dir / "bad.yaml").string() + " --out-dir " + dir.string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("ocp.eps_x"), std::string::npos) << r.output;
  EXPECT_EQ(run_cli("collect").code, 2);
}

TEST(Cli, MpcWritesRunsAndHistogram) {
  const fs::path dir = scratch("mpc");
  {
    std::ofstream f(dir / "short.yaml");
    f << "preset: scalar-gaussian\nrun:\n  mode: mpc\n  steps: 3\n";
  }
  const std::string args = "mpc --config " + (dir / "short.yaml").string() + " --runs 2 --seed 5 --compare";
  const CliResult a = run_cli(args + " --out-dir " + (dir / "a").string());
  ASSERT_EQ(a.code, 0) << a.output;
  const CliResult b = run_cli(args + " --serial --out-dir " + (dir / "b").string());
  ASSERT_EQ(b.code, 0) << b.output;
  for (const char* f : {"performance.csv", "histogram.csv", "runs/run_0000.csv", "runs/run_0001.csv",
                        "runs/baseline_0001.csv"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const std::string hist = slurp(dir / "a" / "histogram.csv");
  EXPECT_EQ(hist.rfind("step,component,bin,lower,upper,mass\n", 0), 0u);
}

}  // namespace
}  // namespace ddspc
