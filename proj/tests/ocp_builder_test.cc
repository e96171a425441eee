#include "ddspc/hankel.hpp"
#include "ddspc/noise_estimation.hpp"
#include "ddspc/ocp_builder.hpp"
#include "ddspc/scenario.hpp"

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <memory>

namespace ddspc {
namespace {

struct ScalarSetup {
  ScenarioConfig cfg;
  BasisPtr basis;
  PceVector x_init;
  PceTrajectory w;
  DataRecord data;
};

ScalarSetup scalar_setup(const std::string& preset_name, std::uint64_t seed) {
  ScalarSetup s;
  s.cfg = preset(preset_name);
  s.basis = std::make_shared<const JointBasis>(s.cfg.basis(true));
  s.x_init = canonical_initial_pce(s.basis);
  s.w = canonical_noise_trajectory(s.basis);
  Rng rng(seed);
  CollectionOptions opts;
  opts.prior_gain = s.cfg.data.prior_gain;
  opts.x0 = Vec::Zero(1);
  s.data = collect_data(s.cfg.system(), s.cfg.noise.spec(), s.cfg.data.input_box, s.cfg.data.T,
                        rng, opts);
  s.data.w_hat = *s.data.w_true;
  return s;
}

TEST(OcpBuilder, SigmaValues) {
  EXPECT_DOUBLE_EQ(sigma(0.2), 3.0);
  EXPECT_DOUBLE_EQ(sigma(1.0), 1.0);
  EXPECT_NEAR(sigma(0.1), std::sqrt(19.0), 1e-15);
  EXPECT_THROW(sigma(0.0), std::invalid_argument);
  EXPECT_THROW(sigma(1.5), std::invalid_argument);
  EXPECT_NEAR(tightening_factor(Tightening::GaussianQuantile, 0.1, false), 1.2815515655446004,
              1e-12);
  EXPECT_NEAR(tightening_factor(Tightening::GaussianQuantile, 0.1, true), 1.6448536269514722,
              1e-12);
}

TEST(OcpBuilder, CausalityIndices) {
  // L_x = 1, L_w = 1, N = 25: L = 26.
  auto z0 = causality_zero_indices(1, 1, 25, 0);
  ASSERT_EQ(z0.size(), 25u);
  EXPECT_EQ(z0.front(), 2);
  EXPECT_EQ(z0.back(), 26);
  auto z24 = causality_zero_indices(1, 1, 25, 24);
  ASSERT_EQ(z24.size(), 1u);
  EXPECT_EQ(z24.front(), 26);
  // L_x = 0, L_w = 4, N = 10: L = 40, offset 9 zeroes 37..40.
  auto a8 = causality_zero_indices(0, 4, 10, 9);
  ASSERT_EQ(a8.size(), 4u);
  EXPECT_EQ(a8.front(), 37);
  EXPECT_EQ(a8.back(), 40);
}

TEST(OcpBuilder, ZeroProblemHasZeroObjective) {
  const LtiSystem sys(Mat::Constant(1, 1, 0.5), Mat::Ones(1, 1));
  OcpSpec spec;
  spec.N = 5;
  spec.Q = Mat::Identity(1, 1);
  spec.R = Mat::Identity(1, 1);
  spec.state_box = ChanceBox::unbounded(1);
  spec.input_box = ChanceBox::unbounded(1);
  auto basis = std::make_shared<const JointBasis>(
      JointBasis::build_horizon_basis(std::nullopt, NoiseSpec::gaussian_diag(Vec::Zero(1)).germ(), 5));
  const PceVector x0 = pin_initial_state(basis, Vec::Zero(1));
  const PceTrajectory w = canonical_noise_trajectory(basis);
  const ConicProgram p = build_model_based(sys, spec, *basis, x0, w);
  const SolveResult r = solve(p);
  ASSERT_EQ(r.report.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.report.objective, 0.0, 1e-10);
  EXPECT_LE(r.z.cwiseAbs().maxCoeff(), 1e-8);
}

// Unconstrained deterministic problem against the batch least-squares LQ solution.
TEST(OcpBuilder, DeterministicLqMatchesBatchSolution) {
  Mat A(2, 2);
  A << 1.0, 0.1, -0.2, 0.9;
  Mat B(2, 1);
  B << 0.0, 0.5;
  const LtiSystem sys(A, B);
  OcpSpec spec;
  spec.N = 6;
  spec.Q = Vec(Eigen::Vector2d(2.0, 0.5)).asDiagonal();
  spec.R = Mat::Constant(1, 1, 0.3);
  spec.state_box = ChanceBox::unbounded(2);
  spec.input_box = ChanceBox::unbounded(1);
  auto basis = std::make_shared<const JointBasis>(JointBasis::build_horizon_basis(
      std::nullopt, NoiseSpec::gaussian_diag(Vec::Zero(2)).germ(), spec.N));
  const Vec x0 = Eigen::Vector2d(1.0, -0.5);
  const ConicProgram p = build_model_based(sys, spec, *basis, pin_initial_state(basis, x0),
                                           canonical_noise_trajectory(basis));
  const SolveResult r = solve(p);
  ASSERT_EQ(r.report.status, SolveStatus::Optimal);
  const OcpSolution sol = extract_solution(p, basis, r);

  // x_i = A^i x0 + sum_{l<i} A^{i-1-l} B u_l for i = 0..N-1; u_{N-1} only costs R.
  const Index N = spec.N;
  Mat Phi = Mat::Zero(2 * N, N);
  Vec free = Vec::Zero(2 * N);
  Mat Ai = Mat::Identity(2, 2);
  for (Index i = 0; i < N; ++i) {
    free.segment(2 * i, 2) = Ai * x0;
    Ai = A * Ai;
    for (Index l = 0; l < i; ++l) {
      Mat Apow = Mat::Identity(2, 2);
      for (Index k = 0; k < i - 1 - l; ++k) Apow = A * Apow;
      Phi.block(2 * i, l, 2, 1) = Apow * B;
    }
  }
  Mat Qbar = Mat::Zero(2 * N, 2 * N);
  for (Index i = 0; i < N; ++i) Qbar.block(2 * i, 2 * i, 2, 2) = spec.Q;
  const Mat H = Phi.transpose() * Qbar * Phi + spec.R(0, 0) * Mat::Identity(N, N);
  const Vec u_star = -H.ldlt().solve(Phi.transpose() * Qbar * free);
  for (Index i = 0; i < N; ++i) EXPECT_NEAR(sol.u.steps[i](0, 0), u_star(i), 1e-8) << i;
}

TEST(OcpBuilder, ScalarDataDrivenMatchesModelBased) {
  const ScalarSetup s = scalar_setup("scalar-gaussian", 11);
  const auto t0 = std::chrono::steady_clock::now();
  const ConicProgram mb = build_model_based(s.cfg.system(), s.cfg.ocp, *s.basis, s.x_init, s.w);
  const ConicProgram dd = build_data_driven(s.data, s.cfg.ocp, *s.basis, s.x_init, s.w);
  const SolveResult rm = solve(mb);
  const SolveResult rd = solve(dd);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(rm.report.status, SolveStatus::Optimal);
  ASSERT_EQ(rd.report.status, SolveStatus::Optimal);
  const OcpSolution sm = extract_solution(mb, s.basis, rm);
  const OcpSolution sd = extract_solution(dd, s.basis, rd);
  double dmean = 0.0, dstd = 0.0;
  for (Index i = 0; i < s.cfg.ocp.N; ++i) {
    const auto [m1, v1] = moments(sm.x.at(i));
    const auto [m2, v2] = moments(sd.x.at(i));
    dmean = std::max(dmean, std::abs(m1(0) - m2(0)));
    dstd = std::max(dstd, std::abs(std::sqrt(v1(0)) - std::sqrt(v2(0))));
  }
  EXPECT_LE(dmean, 1e-6);
  EXPECT_LE(dstd, 1e-6);
  EXPECT_NEAR(sm.objective, sd.objective, 1e-6 * (1.0 + std::abs(sm.objective)));
  EXPECT_LT(secs, 30.0);
  RecordProperty("seconds", std::to_string(secs));

  // Chance-constraint bound at sigma(0.2) = 3.
  for (Index i = 1; i < s.cfg.ocp.N; ++i) {
    const auto [m, v] = moments(sm.x.at(i));
    EXPECT_LE(m(0) + 3.0 * std::sqrt(v(0)), 2.0 + 1e-6) << i;
    EXPECT_GE(m(0) - 3.0 * std::sqrt(v(0)), -2.0 - 1e-6) << i;
  }
}

TEST(OcpBuilder, CausalityZerosHoldExactly) {
  const ScalarSetup s = scalar_setup("scalar-gaussian", 3);
  const ConicProgram mb = build_model_based(s.cfg.system(), s.cfg.ocp, *s.basis, s.x_init, s.w);
  const SolveResult r = solve(mb);
  ASSERT_EQ(r.report.status, SolveStatus::Optimal);
  const OcpSolution sol = extract_solution(mb, s.basis, r);
  const Index Lx = s.basis->initial_terms();
  const Index Lw = s.basis->noise_terms();
  for (Index i = 0; i < s.cfg.ocp.N; ++i) {
    for (Index j : causality_zero_indices(Lx, Lw, s.cfg.ocp.N, i)) {
      EXPECT_EQ(sol.u.steps[i](j, 0), 0.0) << i << " " << j;
    }
  }
}

TEST(OcpBuilder, ObjectiveEqualsExpectedStageCosts) {
  const ScalarSetup s = scalar_setup("scalar-gaussian", 5);
  const ConicProgram mb = build_model_based(s.cfg.system(), s.cfg.ocp, *s.basis, s.x_init, s.w);
  const SolveResult r = solve(mb);
  ASSERT_EQ(r.report.status, SolveStatus::Optimal);
  const OcpSolution sol = extract_solution(mb, s.basis, r);
  double expected = 0.0;
  for (Index i = 0; i < s.cfg.ocp.N; ++i) {
    const auto [mx, vx] = moments(sol.x.at(i));
    const auto [mu, vu] = moments(sol.u.at(i));
    expected += 0.5 * s.cfg.ocp.Q(0, 0) * (mx(0) * mx(0) + vx(0));
    expected += 0.5 * s.cfg.ocp.R(0, 0) * (mu(0) * mu(0) + vu(0));
  }
  EXPECT_NEAR(sol.objective, expected, 1e-9 * (1.0 + expected));
}

TEST(OcpBuilder, NullspaceReductionPreservesOptimizer) {
  const ScalarSetup s = scalar_setup("scalar-gaussian", 17);
  const ConicProgram dd = build_data_driven(s.data, s.cfg.ocp, *s.basis, s.x_init, s.w);
  const HankelMatrix hw(s.data.w_hat, s.cfg.ocp.N);
  const NullspaceReduction red = apply_nullspace_reduction(dd, hw.matrix(), s.w);
  const Index T = s.data.length();
  const Index N = s.cfg.ocp.N;
  EXPECT_EQ(red.M_w.cols(), T - N * (s.cfg.nx() + 1) + 1);
  const SolveResult full = solve(dd);
  const SolveResult reduced = solve(red.program);
  ASSERT_EQ(full.report.status, SolveStatus::Optimal);
  ASSERT_EQ(reduced.report.status, SolveStatus::Optimal);
  const OcpSolution a = extract_solution(dd, s.basis, full);
  const OcpSolution b = extract_solution(red.program, s.basis, reduced);
  EXPECT_NEAR(a.objective, b.objective, 1e-8 * (1.0 + std::abs(a.objective)));
  double dx = 0.0;
  for (Index i = 0; i < N; ++i) {
    dx = std::max(dx, (a.x.steps[i] - b.x.steps[i]).cwiseAbs().maxCoeff());
    dx = std::max(dx, (a.u.steps[i] - b.u.steps[i]).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(dx, 1e-8);
  // Expanded reduced point satisfies the unreduced equalities.
  const FeasibilityReport f = check_feasibility(dd, red.expand(reduced.z));
  EXPECT_LE(f.equality_residual, 1e-8);
}

TEST(OcpBuilder, ShortDataRaisesPersistencyError) {
  ScalarSetup s = scalar_setup("scalar-gaussian", 2);
  s.data.x.conservativeResize(41, Eigen::NoChange);
  s.data.u.conservativeResize(40, Eigen::NoChange);
  s.data.w_hat.conservativeResize(40, Eigen::NoChange);
  try {
    build_data_driven(s.data, s.cfg.ocp, *s.basis, s.x_init, s.w);
    FAIL() << "expected PersistencyError";
  } catch (const PersistencyError& e) {
    EXPECT_EQ(e.required_order(), 26);
  }
}

TEST(OcpBuilder, AircraftReducedSolveTime) {
  const ScenarioConfig cfg = preset("aircraft");
  auto basis = std::make_shared<const JointBasis>(cfg.basis(false));
  Rng rng(1);
  DataRecord data = collect_data(cfg.system(), cfg.noise.spec(), cfg.data.input_box, cfg.data.T, rng);
  data.w_hat = *data.w_true;
  const PceVector x0 = pin_initial_state(basis, cfg.initial.value);
  const PceTrajectory w = canonical_noise_trajectory(basis);
  const ConicProgram dd = build_data_driven(data, cfg.ocp, *basis, x0, w);
  const NullspaceReduction red = apply_nullspace_reduction(dd, HankelMatrix(data.w_hat, cfg.ocp.N).matrix(), w);
  const PresolvedProgram pre(red.program);
  const auto t0 = std::chrono::steady_clock::now();
  SolveSettings st;
  st.polish = false;
  const SolveResult r = pre.solve(st);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.report.status, SolveStatus::Optimal);
  RecordProperty("seconds", std::to_string(secs));
  std::printf("aircraft reduced solve: %.4f s, %d iterations, reduced dim %ld\n", secs,
              r.report.iterations, static_cast<long>(pre.reduced_dim()));
  EXPECT_LT(secs, 0.5);
}

}  // namespace
}  // namespace ddspc
