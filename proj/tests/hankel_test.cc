#include "ddspc/hankel.hpp"
#include "ddspc/linalg.hpp"
#include "ddspc/lti_sim.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <memory>

namespace ddspc {
namespace {

TEST(Hankel, Layout) {
  const Mat traj = (Mat(3, 1) << 1, 2, 3).finished();
  const HankelMatrix h(traj, 2);
  EXPECT_EQ(h.matrix(), (Mat(2, 2) << 1, 2, 2, 3).finished());

  const HankelMatrix full(traj, 3);
  ASSERT_EQ(full.columns(), 1);
  EXPECT_EQ(full.matrix().col(0), (Vec(3) << 1, 2, 3).finished());

  const Mat two = (Mat(4, 2) << 1, 10, 2, 20, 3, 30, 4, 40).finished();
  const HankelMatrix h2(two, 2);
  EXPECT_EQ(h2.matrix(), (Mat(4, 3) << 1, 2, 3, 10, 20, 30, 2, 3, 4, 20, 30, 40).finished());
  EXPECT_EQ(Mat(h2.block_rows(1)), (Mat(2, 3) << 2, 3, 4, 20, 30, 40).finished());

  EXPECT_THROW(HankelMatrix(traj, 4), DimensionError);
}

TEST(Hankel, ShiftStructure) {
  const Mat traj = Mat::Random(20, 2);
  const HankelMatrix h(traj, 5);
  for (Index c = 0; c + 1 < h.columns(); ++c) {
    EXPECT_EQ(h.matrix().col(c).tail(8), h.matrix().col(c + 1).head(8));
  }
}

TEST(Hankel, PersistencyOfExcitation) {
  EXPECT_FALSE(is_persistently_exciting(Mat::Ones(10, 1), 2));
  Rng rng(2);
  Mat r(100, 1);
  for (Index k = 0; k < 100; ++k) r(k, 0) = rng.standard_normal();
  EXPECT_TRUE(is_persistently_exciting(r, 3));
  EXPECT_FALSE(is_persistently_exciting(r.topRows(2), 3));
}

TEST(Hankel, CoefficientBehavior) {
  const LtiSystem sys((Mat(2, 2) << 0.9, 0.2, -0.1, 0.8).finished(), (Mat(2, 1) << 0.0, 1.0).finished());
  Rng rng(4);
  const InputBox box{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  const DataRecord d = collect_data(sys, NoiseSpec::gaussian_diag(Vec::Constant(2, 0.01)), box, 80, rng);
  const Index t = 6;
  const HankelMatrix hx(d.x.topRows(d.length()), t), hu(d.u, t), hw(*d.w_true, t);

  // A recorded window: residual 0 and the states are reproduced.
  const Index s = 17;
  const auto win = solve_coefficient_behavior(hx, hu, hw, d.x.row(s).transpose(), d.u.middleRows(s, t),
                                              d.w_true->middleRows(s, t));
  EXPECT_LE(win.residual, 1e-10);
  EXPECT_LE((win.x - d.x.middleRows(s, t)).cwiseAbs().maxCoeff(), 1e-9);

  const auto zero = solve_coefficient_behavior(hx, hu, hw, Vec::Zero(2), Mat::Zero(t, 1), Mat::Zero(t, 2));
  EXPECT_LE(zero.g.norm(), 1e-14);

  // Random targets against the model.
  const Vec x0 = Vec::Random(2);
  const Mat ut = Mat::Random(t, 1), wt = Mat::Random(t, 2);
  const auto rnd = solve_coefficient_behavior(hx, hu, hw, x0, ut, wt);
  const Mat sim = simulate_realization(sys, x0, ut, wt);
  EXPECT_LE((rnd.x - sim.topRows(t)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Hankel, ColumnSpaceEquality) {
  const Mat a = Mat::Random(6, 4);
  Mat perm = a;
  perm.col(0).swap(perm.col(3));
  EXPECT_TRUE(column_space_equal(a, perm));
  Mat extra(6, 5);
  extra << a, Mat::Random(6, 1);
  EXPECT_FALSE(column_space_equal(a, extra));
}

TEST(Hankel, Example1Ranks) {
  const auto r = example1_counterexample_check();
  EXPECT_EQ(r.rank_m, 3);
  EXPECT_EQ(r.rank_mc, 4);
  EXPECT_GT(r.least_squares_residual, 0.1);
}

TEST(Linalg, NullspaceAndPseudoInverse) {
  const Mat m = Mat::Random(4, 9);
  const Mat z = linalg::nullspace_basis(m);
  EXPECT_EQ(z.cols(), 5);
  EXPECT_LE((m * z).norm(), 1e-13);
  EXPECT_LE((z.transpose() * z - Mat::Identity(5, 5)).norm(), 1e-13);
  const Mat p = linalg::pseudo_inverse(m);
  EXPECT_LE((m * p - Mat::Identity(4, 4)).norm(), 1e-12);
  EXPECT_EQ(linalg::numerical_rank(Mat::Ones(3, 3)), 1);
}

TEST(Linalg, SvdIsValidatedOnRankDeficientInputs) {
  std::srand(3);
  for (Index r : {1, 4, 33}) {
    const Mat m = Mat::Random(48, r) * Mat::Random(r, 115);
    const linalg::Svd d = linalg::svd(m, linalg::SvdVectors::Thin, linalg::SvdVectors::Thin);
    ASSERT_TRUE(d.s.allFinite());
    EXPECT_NEAR(d.s.squaredNorm(), m.squaredNorm(), 1e-10 * m.squaredNorm());
    EXPECT_LE((d.U * d.s.asDiagonal() * d.V.transpose() - m).norm(), 1e-10 * m.norm());
    EXPECT_EQ(linalg::numerical_rank(m), r);
  }
  const linalg::Svd empty = linalg::svd(Mat(0, 3));
  EXPECT_EQ(empty.s.size(), 0);
}

}  // namespace
}  // namespace ddspc
