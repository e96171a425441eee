#include "ddspc/hankel.hpp"

#include "ddspc/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace ddspc {

HankelMatrix::HankelMatrix(const Mat& trajectory, Index depth)
    : depth_(depth), samples_(trajectory.rows()), signal_dim_(trajectory.cols()) {
  require(depth >= 1, "Hankel depth must be at least 1");
  require_dims(samples_ >= depth, "Hankel depth exceeds trajectory length");
  const Index cols = samples_ - depth + 1;
  matrix_.resize(signal_dim_ * depth, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index i = 0; i < depth; ++i) {
      matrix_.block(i * signal_dim_, c, signal_dim_, 1) =
          trajectory.row(i + c).transpose();
    }
  }
}

HankelMatrix build_hankel(const Mat& trajectory, Index depth) {
  return HankelMatrix(trajectory, depth);
}

bool is_persistently_exciting(const Mat& trajectory, Index order) {
  require(trajectory.rows() > 0, "trajectory is empty");
  require(order >= 1, "excitation order must be at least 1");
  if (trajectory.rows() < order) return false;
  const HankelMatrix h(trajectory, order);
  if (h.columns() < h.matrix().rows()) return false;
  // Row scaling does not change the rank but keeps the tolerance meaningful
  // when components differ by orders of magnitude.
  Mat m = h.matrix();
  for (Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (n > 0.0) m.row(r) /= n;
  }
  return linalg::numerical_rank(m) == m.rows();
}

Mat stack_signals(const Mat& u, const Mat& w) {
  require_dims(u.rows() == w.rows(), "signals differ in length");
  Mat z(u.rows(), u.cols() + w.cols());
  z << u, w;
  return z;
}

CoefficientBehavior solve_coefficient_behavior(const HankelMatrix& hx,
                                               const HankelMatrix& hu,
                                               const HankelMatrix& hw,
                                               const Vec& x_init,
                                               const Mat& u_target,
                                               const Mat& w_target) {
  const Index t = hx.depth();
  require_dims(hu.depth() == t && hw.depth() == t, "Hankel depths differ");
  require_dims(hx.columns() == hu.columns() && hx.columns() == hw.columns(),
               "Hankel column counts differ");
  const Index nx = hx.signal_dim();
  const Index nu = hu.signal_dim();
  require_dims(x_init.size() == nx && u_target.rows() == t && u_target.cols() == nu &&
                   w_target.rows() == t && w_target.cols() == hw.signal_dim(),
               "target window dimension mismatch");

  const Index rows = nx + hu.matrix().rows() + hw.matrix().rows();
  Mat lhs(rows, hx.columns());
  lhs << hx.block_rows(0), hu.matrix(), hw.matrix();
  Vec rhs(rows);
  rhs.head(nx) = x_init;
  for (Index i = 0; i < t; ++i) {
    rhs.segment(nx + i * nu, nu) = u_target.row(i).transpose();
    rhs.segment(nx + t * nu + i * hw.signal_dim(), hw.signal_dim()) =
        w_target.row(i).transpose();
  }

  CoefficientBehavior out;
  out.g = Eigen::CompleteOrthogonalDecomposition<Mat>(lhs).solve(rhs);
  if (!out.g.allFinite()) out.g = linalg::pseudo_inverse(lhs) * rhs;
  out.residual = (lhs * out.g - rhs).norm();
  const double scale = 1.0 + rhs.norm() + lhs.norm() * out.g.norm();
  if (out.residual > 1e-9 * scale) {
    throw InconsistentSystemError(
        "target window is not reachable from the Hankel columns (residual " +
        std::to_string(out.residual) + "); data may not be persistently exciting");
  }
  const Vec xs = hx.matrix() * out.g;
  out.x.resize(t, nx);
  for (Index i = 0; i < t; ++i) out.x.row(i) = xs.segment(i * nx, nx).transpose();
  return out;
}

bool column_space_equal(const Mat& a, const Mat& b, double tol_scale) {
  require_dims(a.rows() == b.rows(), "column_space_equal needs equal row counts");
  Mat ab(a.rows(), a.cols() + b.cols());
  ab << a, b;
  const Index ra = linalg::numerical_rank(a, tol_scale);
  const Index rb = linalg::numerical_rank(b, tol_scale);
  const Index rab = linalg::numerical_rank(ab, tol_scale);
  return ra == rb && rb == rab;
}

StackedGalerkinSystem galerkin_stacked_system(
    const std::vector<std::vector<Mat>>& signals,
    const std::vector<std::vector<Mat>>& targets, Index depth) {
  require(!signals.empty() && signals.size() == targets.size(),
          "signals and targets must be nonempty and paired");
  const size_t terms = signals.front().size();
  std::vector<Mat> row_blocks;
  std::vector<Vec> rhs_blocks;
  Index total_rows = 0;
  Index cols = -1;
  for (size_t j = 0; j < terms; ++j) {
    for (size_t s = 0; s < signals.size(); ++s) {
      require(signals[s].size() == terms && targets[s].size() == terms,
              "every signal needs one trajectory per basis term");
      const HankelMatrix h(signals[s][j], depth);
      if (cols < 0) cols = h.columns();
      require_dims(h.columns() == cols, "signals differ in length");
      const Mat& tgt = targets[s][j];
      require_dims(tgt.rows() == depth && tgt.cols() == signals[s][j].cols(),
                   "target window has wrong shape");
      Vec r(depth * tgt.cols());
      for (Index i = 0; i < depth; ++i) r.segment(i * tgt.cols(), tgt.cols()) = tgt.row(i).transpose();
      row_blocks.push_back(h.matrix());
      rhs_blocks.push_back(r);
      total_rows += h.matrix().rows();
    }
  }
  StackedGalerkinSystem sys;
  sys.M.resize(total_rows, cols);
  sys.c.resize(total_rows);
  Index r0 = 0;
  for (size_t b = 0; b < row_blocks.size(); ++b) {
    sys.M.middleRows(r0, row_blocks[b].rows()) = row_blocks[b];
    sys.c.segment(r0, rhs_blocks[b].size()) = rhs_blocks[b];
    r0 += row_blocks[b].rows();
  }
  return sys;
}

CounterexampleRanks example1_counterexample_check(double tol_scale) {
  // X_{k+1} = X_k + U_k with two-term PCEs; rows are times 0..2.
  Mat x0(3, 1), x1(3, 1), u0(3, 1), u1(3, 1);
  x0 << 0, 0, 1;
  x1 << 0, 1, 1;
  u0 << 0, 1, 1;
  u1 << 1, 0, 1;
  Mat tx0(1, 1), tx1(1, 1), tu0(1, 1), tu1(1, 1);
  tx0 << 0;
  tx1 << 1;
  tu0 << 0;
  tu1 << 1;

  CounterexampleRanks out;
  out.system = galerkin_stacked_system({{x0, x1}, {u0, u1}}, {{tx0, tx1}, {tu0, tu1}}, 1);
  const Mat& M = out.system.M;
  Mat mc(M.rows(), M.cols() + 1);
  mc << M, out.system.c;
  out.rank_m = linalg::numerical_rank(M, tol_scale);
  out.rank_mc = linalg::numerical_rank(mc, tol_scale);
  const Vec g = Eigen::CompleteOrthogonalDecomposition<Mat>(M).solve(out.system.c);
  out.least_squares_residual = (M * g - out.system.c).norm();
  return out;
}

}  // namespace ddspc
