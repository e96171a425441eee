#pragma once

#include "ddspc/conic_program.hpp"
#include "ddspc/types.hpp"

#include <memory>
#include <vector>

namespace ddspc {

using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolveSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iters = 200;
  /// Ratio threshold of the infeasibility certificates.
  double infeasibility_tol = 1e-8;
  /// Ruiz scaling of the reduced problem. A run that hits the iteration
  /// limit is retried once with the opposite setting.
  bool equilibrate = false;
  /// Newton refinement of the converged point on the exact optimality system.
  bool polish = true;

  void validate() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, IterLimit };

const char* status_name(SolveStatus status);

struct SolveReport {
  SolveStatus status = SolveStatus::IterLimit;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double objective = 0.0;
  bool polished = false;
};

struct SolveResult {
  Vec z;
  SolveReport report;
};

/// Cone product R^nonneg_+ x SOC(soc_dims[0]) x ... in row order.
struct ConeDims {
  Index nonneg = 0;
  std::vector<Index> soc;

  Index total() const;
  Index degree() const { return nonneg + static_cast<Index>(soc.size()); }
};

/// min 1/2 y^T P y + q^T y  s.t.  G y + s = h,  s in K.
struct StandardProblem {
  Mat P;
  Vec q;
  SpMatRow G;
  Vec h;
  ConeDims cones;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. `result.z` holds y.
SolveResult solve_standard(const StandardProblem& problem, const SolveSettings& settings);

/// Program prepared for repeated solves with changing fixed-variable values.
///
/// Fixed variables are substituted, the equalities are split into connected
/// blocks and each block is parameterized by a particular solution plus an
/// orthonormal null-space basis, restricted to the directions that the
/// objective or the inequality/cone rows can see. The reduced problem has
/// no equalities and is passed to solve_standard.
class PresolvedProgram {
 public:
  explicit PresolvedProgram(ConicProgram program);
  ~PresolvedProgram();
  PresolvedProgram(PresolvedProgram&&) noexcept;
  PresolvedProgram& operator=(PresolvedProgram&&) noexcept;

  const ConicProgram& program() const;
  Index reduced_dim() const;

  /// Solves with the program's own fixed values.
  SolveResult solve(const SolveSettings& settings = {}) const;
  /// Solves with `fixed_values` aligned to program().fixed.
  SolveResult solve(const Vec& fixed_values, const SolveSettings& settings = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SolveResult solve(const ConicProgram& program, const SolveSettings& settings = {});

/// Violations of a candidate point, computed directly from the program data.
struct FeasibilityReport {
  double equality_residual = 0.0;    ///< ||A z - b||_inf
  double inequality_violation = 0.0; ///< max(C z - d, 0)
  double cone_violation = 0.0;       ///< max(||F z + f|| - g^T z - h, 0)
  double fixed_violation = 0.0;      ///< max |z_i - value_i|

  double worst() const;
};

FeasibilityReport check_feasibility(const ConicProgram& program, const Vec& z);
FeasibilityReport check_feasibility(const ConicProgram& program, const Vec& z,
                                    const Vec& fixed_values);

}  // namespace ddspc
