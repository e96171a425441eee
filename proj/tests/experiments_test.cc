#include "ddspc/artifacts.hpp"
#include "ddspc/experiments.hpp"
#include "ddspc/parallel.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

namespace ddspc {
namespace {

TEST(Parallel, ForEachIndexVisitsAllAndRethrows) {
  for (Execution e : {Execution::Serial, Execution::Parallel}) {
    std::vector<int> seen(100, 0);
    for_each_index(100, e, [&](Index i) { seen[static_cast<size_t>(i)] += 1; });
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_THROW(for_each_index(10, e, [](Index i) {
                   if (i == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
  }
}

struct ScalarOpenLoop {
  ScenarioConfig cfg;
  OpenLoopProblem problem;
  OpenLoopResult result;
};

const ScalarOpenLoop& scalar_open_loop() {
  static const ScalarOpenLoop s = [] {
    ScalarOpenLoop r{preset("scalar-gaussian"), {}, {}};
    r.problem = open_loop_problem(r.cfg);
    const DataRecord d = collect_scenario_data(r.cfg, Rng(2)).data.with_exact_noise();
    r.result = solve_open_loop(r.cfg, r.problem, OcpForm::DataDrivenReduced, &d);
    return r;
  }();
  return s;
}

TEST(Experiments, SamplingIsIndependentOfExecution) {
  const ScalarOpenLoop& s = scalar_open_loop();
  ASSERT_EQ(s.result.solution.report.status, SolveStatus::Optimal);
  const auto a = sample_policy(s.cfg.system(), s.problem.x_init, s.result.solution.u, s.problem.w,
                               10000, 5, Execution::Serial, &s.cfg.ocp.state_box);
  const auto b = sample_policy(s.cfg.system(), s.problem.x_init, s.result.solution.u, s.problem.w,
                               10000, 5, Execution::Parallel, &s.cfg.ocp.state_box);
  EXPECT_EQ(a.samples, 10000);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_EQ(a.violation, b.violation);
  const auto c = sample_policy(s.cfg.system(), s.problem.x_init, s.result.solution.u, s.problem.w,
                               10000, 6, Execution::Serial);
  EXPECT_NE(a.mean, c.mean);
}

TEST(Experiments, SampledMomentsMatchExpansion) {
  const ScalarOpenLoop& s = scalar_open_loop();
  const MomentSeries m = moment_series(s.result.solution.x);
  const auto mc = sample_policy(s.cfg.system(), s.problem.x_init, s.result.solution.u, s.problem.w,
                                40000, 11);
  ASSERT_EQ(mc.mean.rows(), m.mean.rows());
  for (Index i = 0; i < m.mean.rows(); ++i) {
    EXPECT_LE(std::abs(mc.mean(i, 0) - m.mean(i, 0)), 5.0 * mc.mean_se(i, 0) + 1e-12) << i;
    EXPECT_LE(std::abs(mc.variance(i, 0) - m.variance(i, 0)), 5.0 * mc.variance_se(i, 0) + 1e-12) << i;
  }
  // The initial state U(0.6, 1.4) has mean 1 and variance 0.8^2 / 12.
  EXPECT_NEAR(m.mean(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.variance(0, 0), 0.64 / 12.0, 1e-12);
}

TEST(Experiments, ModelBasedAgreesWithExactDataDriven) {
  const ScalarOpenLoop& s = scalar_open_loop();
  const OpenLoopResult mb = solve_open_loop(s.cfg, s.problem, OcpForm::ModelBased, nullptr);
  ASSERT_EQ(mb.solution.report.status, SolveStatus::Optimal);
  const MomentSeries a = moment_series(mb.solution.x);
  const MomentSeries b = moment_series(s.result.solution.x);
  EXPECT_LE((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(solve_open_loop(s.cfg, s.problem, OcpForm::DataDriven, nullptr), std::invalid_argument);
}

TEST(Experiments, ClosedLoopBatchIsIndependentOfExecution) {
  ScenarioConfig cfg = preset("scalar-gaussian");
  cfg.run.steps = 4;
  ClosedLoopOptions opts;
  opts.compare = true;
  const auto a = run_closed_loop_batch(cfg, 3, 2, opts, Execution::Serial);
  const auto b = run_closed_loop_batch(cfg, 3, 2, opts, Execution::Parallel);
  ASSERT_EQ(a.size(), 2u);
  for (size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].run, static_cast<Index>(r));
    ASSERT_FALSE(a[r].record.aborted) << a[r].record.abort_reason;
    ASSERT_TRUE(a[r].baseline.has_value());
    EXPECT_EQ(a[r].cost, b[r].cost);
    EXPECT_EQ(a[r].baseline_cost, b[r].baseline_cost);
    EXPECT_EQ(a[r].record.states, b[r].record.states);
    std::ostringstream ta, tb;
    write_trajectory_csv(ta, a[r].record);
    write_trajectory_csv(tb, b[r].record);
    EXPECT_EQ(ta.str(), tb.str());
  }
  EXPECT_NE(a[0].cost, a[1].cost);
}

TEST(Artifacts, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, 123456789.123456789}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
    EXPECT_EQ(s.find(','), std::string::npos);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Artifacts, DataFileRoundTripIsExact) {
  const ScenarioConfig cfg = preset("aircraft");
  const CollectedData c = collect_scenario_data(cfg, Rng(4));
  DataFile f;
  f.scenario = cfg.name;
  f.seed = 4;
  f.attempts = c.attempts;
  f.data = c.data;
  std::stringstream ss;
  write_data_file(ss, f);
  const DataFile back = read_data_file(ss);
  EXPECT_EQ(back.scenario, "aircraft");
  EXPECT_EQ(back.seed, 4u);
  EXPECT_EQ(back.data.x, f.data.x);
  EXPECT_EQ(back.data.u, f.data.u);
  EXPECT_EQ(back.data.w_hat, f.data.w_hat);
  ASSERT_TRUE(back.data.w_true.has_value());
  EXPECT_EQ(*back.data.w_true, *f.data.w_true);

  std::stringstream bad("{\"scenario\": \"x\", \"seed\": 1, \"x\": [[1]], \"u\": []}");
  try {
    read_data_file(bad);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("w_hat"), std::string::npos) << e.what();
  }
}

TEST(Artifacts, CsvLayouts) {
  const ScalarOpenLoop& s = scalar_open_loop();
  std::ostringstream sol, sum;
  write_solution_csv(sol, s.result.solution);
  write_summary_csv(sum, s.result.solution);
  const std::string a = sol.str();
  const std::string b = sum.str();
  EXPECT_EQ(a.substr(0, a.find('\n')), "step,coefficient,role,component,value");
  EXPECT_EQ(b.substr(0, b.find('\n')), "step,role,component,mean,variance");
  const Index L1 = s.problem.basis->total_terms();
  const Index N = s.cfg.ocp.N;
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * N * L1);
  EXPECT_EQ(std::count(b.begin(), b.end(), '\n'), 1 + 2 * N);
}

}  // namespace
}  // namespace ddspc
