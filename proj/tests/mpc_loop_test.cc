#include "ddspc/experiments.hpp"
#include "ddspc/mpc_loop.hpp"
#include "ddspc/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>

namespace ddspc {
namespace {

struct ScalarController {
  ScenarioConfig cfg;
  BasisPtr basis;
  CollectedData data;
};

ScalarController scalar_controller(std::uint64_t seed) {
  ScalarController s{preset("scalar-gaussian"), nullptr, {}};
  s.cfg.ocp.Q = Mat::Identity(1, 1);
  s.basis = std::make_shared<const JointBasis>(s.cfg.basis(false));
  s.data = collect_scenario_data(s.cfg, Rng(seed));
  return s;
}

TEST(MpcLoop, MinimumSamplesCountingBound) {
  EXPECT_EQ(minimum_samples(1, 1, 25), 77);
  EXPECT_EQ(minimum_samples(4, 1, 10), 83);
}

TEST(MpcLoop, ShortRecordNamesRequiredOrder) {
  ScenarioConfig cfg = preset("scalar-gaussian");
  cfg.data.T = 10;
  try {
    collect_scenario_data(cfg, Rng(1));
    FAIL() << "expected PersistencyError";
  } catch (const PersistencyError& e) {
    EXPECT_EQ(e.required_order(), 26);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("26"), std::string::npos) << msg;
    EXPECT_NE(msg.find("77"), std::string::npos) << msg;
  }
}

TEST(MpcLoop, CollectionWindowAndDeterminism) {
  const ScenarioConfig cfg = preset("scalar-gaussian");
  const CollectedData a = collect_scenario_data(cfg, Rng(3));
  const CollectedData b = collect_scenario_data(cfg, Rng(3));
  EXPECT_EQ(a.data.length(), cfg.data.T);
  EXPECT_EQ(a.data.x.rows(), cfg.data.T + 1);
  EXPECT_EQ(a.estimation.w_hat.rows(), cfg.data.T + cfg.data.T_est);
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.w_hat, b.data.w_hat);
  EXPECT_GE(a.attempts, 1);
  // The window is the tail of the estimation record.
  EXPECT_EQ(a.data.w_hat, a.estimation.w_hat.bottomRows(cfg.data.T));
}

TEST(MpcLoop, NoiseFreeClosedLoopConverges) {
  const ScalarController s = scalar_controller(5);
  const MpcController ctrl(s.data.data, s.cfg.ocp, s.basis);
  const NoiseSpec silent = NoiseSpec::gaussian_diag(Vec::Zero(1));
  const ClosedLoopRecord rec =
      run_mpc(s.cfg.system(), silent, ctrl, s.cfg.ocp, Vec::Constant(1, 1.0), 30, Rng(1));
  ASSERT_FALSE(rec.aborted) << rec.abort_reason;
  ASSERT_EQ(rec.states.size(), 31u);
  for (const auto& st : rec.steps) EXPECT_EQ(st.w(0), 0.0);
  EXPECT_LE(std::abs(rec.states.back()(0)), 1e-6);
  EXPECT_LT(std::abs(rec.states[10](0)), std::abs(rec.states[0](0)));
}

TEST(MpcLoop, AppliedInputIsMeanCoefficientAndStateIsPinned) {
  const ScalarController s = scalar_controller(6);
  const MpcController ctrl(s.data.data, s.cfg.ocp, s.basis);
  const ClosedLoopRecord rec = run_mpc(s.cfg.system(), s.cfg.noise.spec(), ctrl, s.cfg.ocp,
                                       Vec::Constant(1, 1.0), 4, Rng(2));
  ASSERT_FALSE(rec.aborted) << rec.abort_reason;
  for (const auto& st : rec.steps) {
    const MpcController::Step again = ctrl.solve(st.x);
    EXPECT_EQ(st.u, again.u);
    EXPECT_EQ(st.u(0), again.solution.u.steps.front()(0, 0));
    // Receding horizon: the prediction starts at the measured state, deterministically.
    const Mat& x0 = again.solution.x.steps.front();
    EXPECT_EQ(x0(0, 0), st.x(0));
    EXPECT_EQ(x0.bottomRows(x0.rows() - 1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(st.stage_cost, st.x.squaredNorm() + st.u.squaredNorm());
  }
  for (size_t k = 0; k + 1 < rec.states.size(); ++k) {
    const auto& st = rec.steps[k];
    EXPECT_EQ(rec.states[k + 1], step_realization(s.cfg.system(), st.x, st.u, st.w));
  }
}

TEST(MpcLoop, EqualGeneratorsGiveEqualNoise) {
  const ScalarController s = scalar_controller(7);
  const MpcController est(s.data.data, s.cfg.ocp, s.basis, false);
  const MpcController exact(s.data.data, s.cfg.ocp, s.basis, true);
  const auto a = run_mpc(s.cfg.system(), s.cfg.noise.spec(), est, s.cfg.ocp, Vec::Ones(1), 3, Rng(9));
  const auto b = run_mpc(s.cfg.system(), s.cfg.noise.spec(), exact, s.cfg.ocp, Vec::Ones(1), 3, Rng(9));
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (size_t k = 0; k < a.steps.size(); ++k) EXPECT_EQ(a.steps[k].w, b.steps[k].w);
}

TEST(MpcLoop, ExactNoiseNeedsRecordedNoise) {
  ScalarController s = scalar_controller(8);
  s.data.data.w_true.reset();
  EXPECT_THROW(MpcController(s.data.data, s.cfg.ocp, s.basis, true), std::invalid_argument);
}

TEST(MpcLoop, PerformanceOfZeroRecordIsZero) {
  ClosedLoopRecord rec;
  for (Index k = 0; k < 5; ++k) {
    StepRecord st;
    st.k = k;
    st.x = Vec::Zero(2);
    st.u = Vec::Zero(1);
    rec.steps.push_back(st);
  }
  const Performance p = evaluate_performance(rec, Mat::Identity(2, 2), Mat::Identity(1, 1));
  EXPECT_EQ(p.total, 0.0);
  EXPECT_EQ(p.per_step.size(), 5);
  EXPECT_THROW(evaluate_performance(ClosedLoopRecord{}, Mat::Identity(2, 2), Mat::Identity(1, 1)),
               std::invalid_argument);

  rec.steps[2].x = Vec::Ones(2);
  rec.steps[2].u = Vec::Constant(1, 2.0);
  EXPECT_DOUBLE_EQ(evaluate_performance(rec, Mat::Identity(2, 2), 3.0 * Mat::Identity(1, 1)).total,
                   2.0 + 12.0);
}

TEST(MpcLoop, HistogramMassAndCommonEdges) {
  std::vector<ClosedLoopRecord> records;
  Rng rng(4);
  for (int r = 0; r < 40; ++r) {
    ClosedLoopRecord rec;
    for (int k = 0; k < 4; ++k) rec.states.push_back(Vec::Constant(2, rng.standard_normal()));
    records.push_back(rec);
  }
  records.back().states.resize(2);  // an aborted run
  const auto h = histogram_export(records, 1, {0, 1, 3}, 12);
  ASSERT_EQ(h.size(), 3u);
  for (const auto& hist : h) {
    EXPECT_EQ(hist.edges.size(), 13);
    EXPECT_EQ(hist.edges, h.front().edges);
    EXPECT_NEAR(hist.mass.sum(), 1.0, 1e-12);
    EXPECT_GE(hist.mass.minCoeff(), 0.0);
  }
  EXPECT_NEAR(h[2].mass.sum() * 39.0, 39.0, 1e-9);
}

}  // namespace
}  // namespace ddspc
