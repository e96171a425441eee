#pragma once

#include "ddspc/conic_solver.hpp"
#include "ddspc/lti_sim.hpp"
#include "ddspc/noise_estimation.hpp"
#include "ddspc/ocp_builder.hpp"
#include "ddspc/pce_basis.hpp"
#include "ddspc/random.hpp"
#include "ddspc/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ddspc {

struct CollectionSettings {
  Index T = 150;       ///< samples in the Hankel window
  Index T_est = 0;     ///< extra leading samples used only by the noise estimator
  Index N = 1;         ///< prediction horizon; PE of order n_x + N is required
  InputBox input_box;
  Mat prior_gain;      ///< optional u = -K x + e during collection
  Vec x0;              ///< experiment initial state (zero when empty)
  int max_retries = 10;
};

/// Smallest T for which the depth-(n_x + N) Hankel matrix of the stacked
/// (u, w) signal can have full row rank: (n_u + n_x)(n_x + N) + (n_x + N) - 1.
Index minimum_samples(Index nx, Index nu, Index N);

struct CollectedData {
  /// Window of the last T samples; w_hat holds the least-squares estimate,
  /// w_true the simulated noise.
  DataRecord data;
  EstimationResult estimation;  ///< over the whole T_est + T record
  int attempts = 0;
};

/// Runs excitation experiments until the stacked (u, w_hat) window is
/// persistently exciting of order n_x + N. Throws PersistencyError naming
/// that order when T is below minimum_samples() or when max_retries
/// experiments all fail. Attempt r draws from rng.stream(r).
CollectedData collect_until_pe(const LtiSystem& plant, const NoiseSpec& noise,
                               const CollectionSettings& settings, const Rng& rng);

/// Receding-horizon controller over one data set. The data-driven program is
/// built, reduced to the noise null space and presolved once; each step only
/// changes the pinned initial state.
class MpcController {
 public:
  /// `basis` must have no initial-state block. `use_true_noise` selects
  /// data.w_true instead of data.w_hat.
  MpcController(const DataRecord& data, const OcpSpec& spec, BasisPtr basis,
                bool use_true_noise = false, SolveSettings settings = default_settings());

  struct Step {
    Vec u;  ///< applied input, the mean coefficient of u_{k|k}
    SolveReport report;
    OcpSolution solution;
  };
  Step solve(const Vec& x_k) const;

  const ConicProgram& program() const;
  Index reduced_dim() const;

  /// Interior point without the dense polishing step.
  static SolveSettings default_settings();

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct StepRecord {
  Index k = 0;
  Vec x;  ///< measured state x_k
  Vec u;  ///< applied input
  Vec w;  ///< realized plant noise
  double stage_cost = 0.0;  ///< x^T Q x + u^T R u
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  double predicted_objective = 0.0;
};

struct ClosedLoopRecord {
  std::vector<StepRecord> steps;
  std::vector<Vec> states;  ///< x_0 .. x_K (one more than steps when complete)
  bool aborted = false;
  std::string abort_reason;
};

/// Algorithm loop with exact state feedback. Plant noise for step k is drawn
/// from `noise_rng`; two calls with equal generators see the same noise. A
/// non-optimal solve ends the run: the step is recorded without an applied
/// input and `aborted` is set.
ClosedLoopRecord run_mpc(const LtiSystem& plant, const NoiseSpec& noise,
                         const MpcController& controller, const OcpSpec& spec, const Vec& x0,
                         Index steps, Rng noise_rng);

struct Performance {
  double total = 0.0;
  Vec per_step;
};

/// Realized cost sum_k x_k^T Q x_k + u_k^T R u_k. Throws on an empty record.
Performance evaluate_performance(const ClosedLoopRecord& record, const Mat& Q, const Mat& R);

struct Histogram {
  Index step = 0;
  Vec edges;  ///< bins + 1 edges
  Vec mass;   ///< fraction of runs per bin, sums to 1
};

/// Histogram of state component `component` over the runs at each requested
/// step, with common edges spanning all requested steps. Runs that ended
/// before a step do not contribute to it.
std::vector<Histogram> histogram_export(const std::vector<ClosedLoopRecord>& records,
                                        Index component, const std::vector<Index>& steps,
                                        Index bins = 30);

}  // namespace ddspc
