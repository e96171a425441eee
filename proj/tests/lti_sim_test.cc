#include "ddspc/lti_sim.hpp"
#include "ddspc/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

namespace ddspc {
namespace {

TEST(LtiSim, StepExamples) {
  const LtiSystem scalar(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0));
  EXPECT_DOUBLE_EQ(step_realization(scalar, Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), Vec::Zero(1))(0), 1.0);

  const auto air = preset("aircraft");
  const LtiSystem sys = air.system();
  EXPECT_EQ(step_realization(sys, Vec::Zero(4), Vec::Zero(1), Vec::Zero(4)), Vec::Zero(4));
  Vec e4 = Vec::Zero(4);
  e4(3) = 1.0;
  const Vec col = step_realization(sys, e4, Vec::Zero(1), Vec::Zero(4));
  EXPECT_EQ(col, Vec(air.A.col(3)));
  EXPECT_EQ(col, (Vec(4) << 0, 0, 0, 1).finished());
}

TEST(LtiSim, RejectsBadShapes) {
  EXPECT_THROW(LtiSystem(Mat::Zero(2, 3), Mat::Zero(2, 1)), DimensionError);
  EXPECT_THROW(LtiSystem(Mat::Zero(2, 2), Mat::Zero(3, 1)), DimensionError);
}

TEST(LtiSim, PropagationVarianceClosedForm) {
  const LtiSystem sys(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0));
  const GermFamily g = GermFamily::gaussian(Vec::Zero(1), Vec::Constant(1, 0.5));
  const auto b = std::make_shared<const JointBasis>(JointBasis::build_horizon_basis(std::nullopt, g, 2));
  Mat x0 = Mat::Zero(b->total_terms(), 1);
  x0(0, 0) = 1.0;
  PceTrajectory u{{Mat::Zero(b->total_terms(), 1), Mat::Zero(b->total_terms(), 1)}, b};
  const PceTrajectory w = canonical_noise_trajectory(b);
  const PceTrajectory x = propagate_pce(sys, PceVector(x0, b), u, w, 2);
  ASSERT_EQ(x.length(), 3);
  const auto [m, v] = moments(x.at(2));
  EXPECT_DOUBLE_EQ(m(0), 4.0);
  EXPECT_NEAR(v(0), 0.25 * (4.0 + 1.0), 1e-14);

  PceTrajectory zu{{Mat::Zero(b->total_terms(), 1), Mat::Zero(b->total_terms(), 1)}, b};
  const PceTrajectory z = propagate_pce(sys, PceVector(Mat::Zero(b->total_terms(), 1), b), zu, zu, 2);
  for (const auto& s : z.steps) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LtiSim, PropagationCommutesWithSampling) {
  const auto cfg = preset("aircraft");
  const LtiSystem sys = cfg.system();
  const GermFamily g = cfg.noise.spec().germ();
  const Index N = 6;
  const auto b = std::make_shared<const JointBasis>(
      JointBasis::build_horizon_basis(GermFamily::gaussian(Vec::Zero(4), Vec::Ones(4)), g, N));
  Rng rng(5);
  Mat x0 = Mat::Zero(b->total_terms(), 4);
  x0.row(0) = Vec::Random(4).transpose();
  for (Index c = 0; c < 4; ++c) x0(1 + c, c) = 1.0;
  PceTrajectory u;
  u.basis = b;
  for (Index i = 0; i < N; ++i) u.steps.push_back(Mat::Random(b->total_terms(), 1));
  const PceTrajectory w = canonical_noise_trajectory(b);
  const PceTrajectory x = propagate_pce(sys, PceVector(x0, b), u, w, N);
  for (int s = 0; s < 100; ++s) {
    const Vec phi = b->evaluate(b->sample_germ(rng));
    Mat ut(N, 1), wt(N, 4);
    for (Index i = 0; i < N; ++i) {
      ut.row(i) = u.at(i).realize(phi).transpose();
      wt.row(i) = w.at(i).realize(phi).transpose();
    }
    const Mat sim = simulate_realization(sys, PceVector(x0, b).realize(phi), ut, wt);
    for (Index i = 0; i <= N; ++i) {
      const Vec xs = x.at(i).realize(phi);
      EXPECT_LE((sim.row(i).transpose() - xs).norm(), 1e-12 * (1.0 + xs.norm()));
    }
  }
}

TEST(LtiSim, NoiseSampling) {
  Rng rng(9);
  const Mat gw = sample_noise(NoiseSpec::gaussian_diag(Vec::Constant(1, 0.25)), 100000, rng);
  const double var = gw.col(0).squaredNorm() / gw.rows();
  EXPECT_NEAR(var, 0.25, 4.0 * 0.25 * std::sqrt(2.0 / gw.rows()));

  const Mat uw = sample_noise(NoiseSpec::uniform_box(Vec::Constant(1, 0.866)), 10000, rng);
  EXPECT_LE(uw.cwiseAbs().maxCoeff(), 0.866);

  const Vec diag = (Vec(4) << 0.01, 0.01, 0.01, 4.0).finished();
  const Mat aw = sample_noise(NoiseSpec::gaussian_diag(diag), 100000, rng);
  for (Index c = 0; c < 4; ++c) {
    const double v = aw.col(c).squaredNorm() / aw.rows();
    EXPECT_NEAR(v, diag(c), 4.0 * diag(c) * std::sqrt(2.0 / aw.rows()));
  }

  InputBox box{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  const Mat u = random_input(box, 1000, rng);
  EXPECT_LE(u.cwiseAbs().maxCoeff(), 1.0);
}

TEST(LtiSim, CollectionShapesAndConsistency) {
  const auto cfg = preset("scalar-gaussian");
  Rng rng(1);
  const DataRecord one = collect_data(cfg.system(), cfg.noise.spec(), cfg.data.input_box, 1, rng);
  EXPECT_EQ(one.x.rows(), 2);
  EXPECT_EQ(one.u.rows(), 1);
  ASSERT_TRUE(one.w_true.has_value());
  EXPECT_EQ(one.w_true->rows(), 1);

  CollectionOptions opts;
  opts.prior_gain = cfg.data.prior_gain;
  const DataRecord d = collect_data(cfg.system(), cfg.noise.spec(), cfg.data.input_box, 200, rng, opts);
  for (Index k = 0; k < d.length(); ++k) {
    const Vec next = step_realization(cfg.system(), d.x.row(k).transpose(), d.u.row(k).transpose(),
                                      d.w_true->row(k).transpose());
    EXPECT_EQ(next, Vec(d.x.row(k + 1).transpose()));
  }
  EXPECT_EQ(d.with_exact_noise().w_hat, *d.w_true);
}

}  // namespace
}  // namespace ddspc
