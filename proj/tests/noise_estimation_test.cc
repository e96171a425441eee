#include "ddspc/linalg.hpp"
#include "ddspc/lti_sim.hpp"
#include "ddspc/noise_estimation.hpp"
#include "ddspc/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace ddspc {
namespace {

DataRecord scalar_record(const std::string& name, Index T, std::uint64_t seed) {
  const auto cfg = preset(name);
  Rng rng(seed);
  CollectionOptions opts;
  opts.prior_gain = cfg.data.prior_gain;
  return collect_data(cfg.system(), cfg.noise.spec(), cfg.data.input_box, T, rng, opts);
}

TEST(NoiseEstimation, NoiseFreeDataGivesZero) {
  const auto cfg = preset("aircraft");
  Rng rng(8);
  InputBox box{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  const Mat u = random_input(box, 60, rng);
  Mat x = simulate_realization(cfg.system(), Vec::Random(4), u, Mat::Zero(60, 4));
  const auto est = estimate_noise_ls(x, u);
  EXPECT_LE(est.w_hat.norm(), 1e-8);
}

TEST(NoiseEstimation, ScalarGaussianStatistics) {
  const DataRecord d = scalar_record("scalar-gaussian", 1000, 3);
  const auto est = estimate_noise_ls(d.x, d.u);
  const Vec w = est.w_hat.col(0);
  const Vec wt = d.w_true->col(0);
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  EXPECT_NEAR(var, 0.25, 0.15 * 0.25);
  const double corr = w.dot(wt) / (w.norm() * wt.norm());
  EXPECT_GT(corr, 0.9);
  EXPECT_LE(est.projector_residual, 1e-8);
}

TEST(NoiseEstimation, ProjectorIdentities) {
  const DataRecord d = scalar_record("scalar-uniform", 300, 5);
  const Index T = d.length();
  Mat S(2, T);
  S.row(0) = d.x.topRows(T).col(0).transpose();
  S.row(1) = d.u.col(0).transpose();
  const Mat P = Mat::Identity(T, T) - linalg::pseudo_inverse(S) * S;
  EXPECT_LE((P * P - P).norm(), 1e-10);
  EXPECT_LE((S * P).norm(), 1e-10);
  const auto est = estimate_noise_ls(d.x, d.u);
  EXPECT_LE((est.w_hat.col(0).transpose() - d.x.bottomRows(T).col(0).transpose() * P).norm(), 1e-10);
}

TEST(NoiseEstimation, SquareDataGivesZero) {
  const DataRecord d = scalar_record("scalar-gaussian", 2, 7);
  const auto est = estimate_noise_ls(d.x, d.u);
  EXPECT_LE(est.w_hat.norm(), 1e-12);
}

TEST(NoiseEstimation, RankDeficientDataRejected) {
  Mat x = Mat::Zero(6, 1);
  Mat u = Mat::Zero(5, 1);
  EXPECT_THROW(estimate_noise_ls(x, u), PersistencyError);
}

TEST(NoiseEstimation, GaussianLikelihoodEqualsLeastSquares) {
  const DataRecord d = scalar_record("scalar-gaussian", 400, 9);
  const auto ls = estimate_noise_ls(d.x, d.u);
  const auto ml = estimate_noise_ml(d.x, d.u, NoiseDensity::gaussian());
  EXPECT_LE((ls.w_hat - ml.w_hat).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_FALSE(ml.least_squares_fallback);
}

TEST(NoiseEstimation, UniformFallsBackWithFlag) {
  const DataRecord d = scalar_record("scalar-uniform", 200, 9);
  const auto ml = estimate_noise_ml(d.x, d.u, NoiseDensity::uniform());
  EXPECT_TRUE(ml.least_squares_fallback);
  EXPECT_FALSE(ml.note.empty());
  EXPECT_LE((ml.w_hat - estimate_noise_ls(d.x, d.u).w_hat).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NoiseEstimation, LaplaceMatchesBruteForce) {
  // Three-step record: w = x+ - C S with C in R^{1x2}; grid-search C.
  const Mat x = (Mat(4, 1) << 0.3, 1.1, 1.9, 3.2).finished();
  const Mat u = (Mat(3, 1) << 0.5, -0.2, 0.4).finished();
  const auto ml = estimate_noise_ml(x, u, NoiseDensity::laplace());
  auto cost = [&](double a, double b) {
    double s = 0.0;
    for (Index k = 0; k < 3; ++k) s += std::abs(x(k + 1, 0) - a * x(k, 0) - b * u(k, 0));
    return s;
  };
  double best = 1e300;
  for (double a = -1.0; a <= 4.0; a += 0.002) {
    for (double b = -4.0; b <= 4.0; b += 0.002) best = std::min(best, cost(a, b));
  }
  EXPECT_NEAR(ml.w_hat.cwiseAbs().sum(), best, 1e-2);
  EXPECT_LE(ml.projector_residual, 1e-7);
}

TEST(NoiseEstimation, StudentTRejected) {
  const DataRecord d = scalar_record("scalar-gaussian", 50, 1);
  EXPECT_THROW(estimate_noise_ml(d.x, d.u, NoiseDensity::student_t()), std::invalid_argument);
}

TEST(NoiseEstimation, CustomConvexDensity) {
  const DataRecord d = scalar_record("scalar-gaussian", 120, 2);
  NoiseDensity quad;
  quad.kind = NoiseDensity::Kind::Custom;
  quad.neg_log = [](double w, Index) { return 2.0 * w * w; };
  quad.neg_log_d1 = [](double w, Index) { return 4.0 * w; };
  quad.neg_log_d2 = [](double, Index) { return 4.0; };
  const auto ml = estimate_noise_ml(d.x, d.u, quad);
  EXPECT_LE((ml.w_hat - estimate_noise_ls(d.x, d.u).w_hat).cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace
}  // namespace ddspc
