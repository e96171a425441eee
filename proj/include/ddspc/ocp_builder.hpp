#pragma once

#include "ddspc/conic_program.hpp"
#include "ddspc/conic_solver.hpp"
#include "ddspc/lti_sim.hpp"
#include "ddspc/pce_basis.hpp"
#include "ddspc/types.hpp"

#include <optional>
#include <vector>

namespace ddspc {

/// Per-component interval; infinite bounds switch a face off.
struct ChanceBox {
  Vec lower;
  Vec upper;

  static ChanceBox unbounded(Index dim);
  Index dim() const { return lower.size(); }
  bool has_lower(Index c) const;
  bool has_upper(Index c) const;
};

/// How a chance constraint P[Z in [lb, ub]] >= 1 - eps becomes the bound
/// mean +- factor * std.
enum class Tightening {
  /// factor = sqrt((2 - eps) / eps), valid for any distribution.
  DistributionFree,
  /// factor = Phi^{-1}(1 - eps / 2) for two-sided boxes, Phi^{-1}(1 - eps)
  /// for one-sided ones; exact per face for Gaussian coefficients.
  GaussianQuantile,
};

struct OcpSpec {
  Index N = 1;
  Mat Q;
  Mat R;
  ChanceBox state_box;
  ChanceBox input_box;
  double eps_x = 1.0;
  double eps_u = 1.0;
  Tightening tightening = Tightening::DistributionFree;

  /// Throws DimensionError / std::invalid_argument.
  void validate(Index nx, Index nu) const;
  double state_factor() const;
  double input_factor() const;
};

/// sqrt((2 - eps) / eps) for eps in (0, 1].
double sigma(double eps);

/// Bound factor for one box under the given tightening.
double tightening_factor(Tightening mode, double eps, bool two_sided);

/// Input coefficient indices forced to zero at prediction offset i - k:
/// [L_x + offset * L_w + 1, L] with L = L_x + N * L_w.
std::vector<Index> causality_zero_indices(Index L_x, Index L_w, Index N, Index offset);

/// Problem over PCE coefficients of the predicted states and inputs.
///
/// Layout: role X with (L+1) coefficients x N times x n_x, then role U with
/// (L+1) x N x n_u. The horizon holds N states x_0..x_{N-1} and N inputs;
/// the dynamics link consecutive states, x_0 and the causality zeros are
/// fixed variables, and the objective is
///   sum_i sum_j <phi^j, phi^j> (1/2 x^T Q x + 1/2 u^T R u).
/// Each finite box face at every step with free coefficients adds one cone
///   factor * ||D z^{1:L}|| <= ub - z^0   (or z^0 - lb),  D = diag(sqrt<phi^j, phi^j>);
/// faces whose norm argument is structurally zero become linear rows.
/// State faces start at step 1 since x_0 is fixed. Role Aux holds
/// v = u + K x for a stabilizing gain K; it only conditions the eliminated
/// program and does not change the feasible set.
ConicProgram build_model_based(const LtiSystem& sys, const OcpSpec& spec,
                               const JointBasis& basis, const PceVector& x_init,
                               const PceTrajectory& w_coeffs);

/// Same variables, objective, cones and fixings as build_model_based plus
/// role G with (L+1) coefficients x 1 x (T-N+1); per coefficient j the
/// equalities H_N(x) g^j = x^j, H_N(u) g^j = u^j, H_N(w) g^j = w^j replace
/// the model. Rows per j are ordered x, u, w.
/// Throws PersistencyError (required order n_x + N) when the stacked (u, w)
/// data is not persistently exciting of that order, DimensionError when T < N.
ConicProgram build_data_driven(const DataRecord& data, const OcpSpec& spec,
                               const JointBasis& basis, const PceVector& x_init,
                               const PceTrajectory& w_coeffs);

/// Result of substituting g^j = M_w h^j + H_w^+ w^j.
struct NullspaceReduction {
  ConicProgram program;  ///< roles X, U, H; the w rows are gone
  Mat M_w;               ///< (T-N+1) x (T-N(n_x+1)+1), orthonormal columns
  Mat Hw_pinv;
  Mat g_particular;      ///< (T-N+1) x (L+1), column j = H_w^+ w^j
  SpMat S;               ///< z_unreduced = S z_reduced + s0
  Vec s0;

  /// g^j of a reduced solution, as (L+1) x (T-N+1) rows.
  Mat reconstruct_g(const Vec& z_reduced) const;
  /// Full variable vector of the unreduced program.
  Vec expand(const Vec& z_reduced) const;
};

/// Requires the program from build_data_driven and H_w = H_N(w) of the
/// same data. Throws std::invalid_argument when H_w is not of full row rank
/// and InconsistentSystemError when an eliminated row is violated.
NullspaceReduction apply_nullspace_reduction(const ConicProgram& program, const Mat& Hw,
                                             const PceTrajectory& w_coeffs);

/// Measured state as a PCE: row 0 = x_k, other rows zero.
PceVector pin_initial_state(const BasisPtr& basis, const Vec& x_k);

struct OcpSolution {
  PceTrajectory x;
  PceTrajectory u;
  std::optional<Mat> g;  ///< (L+1) x (T-N+1) when data-driven
  double objective = 0.0;
  SolveReport report;
  Vec z;
};

/// Splits a solution vector by the program layout (G or H roles optional).
OcpSolution extract_solution(const ConicProgram& program, const BasisPtr& basis,
                             const SolveResult& result);

}  // namespace ddspc
