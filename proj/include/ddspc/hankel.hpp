#pragma once

#include "ddspc/pce_basis.hpp"
#include "ddspc/types.hpp"

#include <vector>

namespace ddspc {

/// Block-Hankel matrix of depth t built from a trajectory whose rows are
/// samples z_0..z_{T-1}. Block (i, c) holds z_{i+c}; the matrix is
/// (n_z t) x (T - t + 1).
class HankelMatrix {
 public:
  HankelMatrix(const Mat& trajectory, Index depth);

  const Mat& matrix() const { return matrix_; }
  Index depth() const { return depth_; }
  Index samples() const { return samples_; }
  Index signal_dim() const { return signal_dim_; }
  Index columns() const { return matrix_.cols(); }

  /// Rows of depth-block i (n_z rows).
  auto block_rows(Index i) const {
    return matrix_.middleRows(i * signal_dim_, signal_dim_);
  }

 private:
  Mat matrix_;
  Index depth_;
  Index samples_;
  Index signal_dim_;
};

HankelMatrix build_hankel(const Mat& trajectory, Index depth);

/// Full row rank of the depth-`order` Hankel matrix (SVD, shared rank
/// tolerance). Returns false when the trajectory is shorter than the order.
bool is_persistently_exciting(const Mat& trajectory, Index order);

/// Rows = time; columns = [u components, w components].
Mat stack_signals(const Mat& u, const Mat& w);

struct CoefficientBehavior {
  Vec g;        ///< least-norm combination of Hankel columns
  Mat x;        ///< completed state trajectory H_x g, t x nx
  double residual = 0.0;
};

/// Solves [first block of H_x; H_u; H_w] g = [x_init; u; w] for the
/// least-norm g and completes the state window as H_x g.
/// `u_target` is t x nu, `w_target` is t x nx.
/// Throws InconsistentSystemError when the residual exceeds the tolerance.
CoefficientBehavior solve_coefficient_behavior(const HankelMatrix& hx,
                                               const HankelMatrix& hu,
                                               const HankelMatrix& hw,
                                               const Vec& x_init,
                                               const Mat& u_target,
                                               const Mat& w_target);

/// colsp(a) == colsp(b), decided by rank(a) == rank(b) == rank([a b]).
bool column_space_equal(const Mat& a, const Mat& b, double tol_scale = 1.0);

/// Galerkin projection of H_t(Z) g = Z~ for PCE-valued signals: per basis
/// index j, the Hankel matrices of the j-th coefficient trajectories stacked
/// over the signals. `signals[s][j]` is the coefficient trajectory (rows =
/// time) of signal s on phi^j, `targets[s][j]` its target window.
struct StackedGalerkinSystem {
  Mat M;
  Vec c;
};
StackedGalerkinSystem galerkin_stacked_system(
    const std::vector<std::vector<Mat>>& signals,
    const std::vector<std::vector<Mat>>& targets, Index depth);

/// Ranks of the stacked system of the scalar integrator counterexample.
struct CounterexampleRanks {
  Index rank_m = 0;
  Index rank_mc = 0;
  double least_squares_residual = 0.0;
  StackedGalerkinSystem system;
};
CounterexampleRanks example1_counterexample_check(double tol_scale = 1.0);

}  // namespace ddspc
