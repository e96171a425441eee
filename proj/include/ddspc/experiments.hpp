#pragma once

#include "ddspc/mpc_loop.hpp"
#include "ddspc/ocp_builder.hpp"
#include "ddspc/parallel.hpp"
#include "ddspc/scenario.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ddspc {

/// Collection settings of a scenario: horizon, excitation box, prior gain,
/// T and T_est, experiment started at the origin.
CollectionSettings collection_settings(const ScenarioConfig& config);

/// collect_until_pe on the scenario plant and noise.
CollectedData collect_scenario_data(const ScenarioConfig& config, const Rng& rng);

enum class OcpForm { ModelBased, DataDriven, DataDrivenReduced };

/// Open-loop problem ingredients: horizon basis with the initial-state block
/// (when the initial state is random), initial-state PCE and noise PCE.
struct OpenLoopProblem {
  BasisPtr basis;
  PceVector x_init;
  PceTrajectory w;
};
OpenLoopProblem open_loop_problem(const ScenarioConfig& config);

struct OpenLoopResult {
  OcpSolution solution;
  ConicProgram program;  ///< the program that was solved
  Index reduced_dim = 0;
};

/// Builds and solves one open-loop OCP. Data-driven forms need `data` and use
/// data->w_hat as given.
OpenLoopResult solve_open_loop(const ScenarioConfig& config, const OpenLoopProblem& problem,
                               OcpForm form, const DataRecord* data,
                               const SolveSettings& settings = {});

/// Mean and variance of each trajectory step; rows are steps.
struct MomentSeries {
  Mat mean;
  Mat variance;
};
MomentSeries moment_series(const PceTrajectory& trajectory);

/// Monte Carlo statistics of the plant driven by a PCE policy.
struct SampledMoments {
  Index samples = 0;
  Mat mean;         ///< steps x n_x
  Mat variance;     ///< unbiased sample variance
  Mat mean_se;      ///< standard error of the mean
  Mat variance_se;  ///< standard error of the variance, from the fourth central moment
  Mat violation;    ///< fraction of samples outside the box (zero without a box)
};

/// Draws germ samples, realizes x_0, u_i and w_i from their expansions and
/// simulates x_{i+1} = A x_i + B u_i + w_i for the length of `u`. Samples are
/// split into fixed blocks, block b drawing from Rng(seed).stream(b), so the
/// result does not depend on the execution mode or thread count.
SampledMoments sample_policy(const LtiSystem& system, const PceVector& x_init,
                             const PceTrajectory& u, const PceTrajectory& w, Index samples,
                             std::uint64_t seed, Execution exec = Execution::Parallel,
                             const ChanceBox* box = nullptr);

struct ClosedLoopOptions {
  bool exact_noise = false;  ///< control with the recorded true noise
  bool compare = false;      ///< also run the exact-noise controller on the same data and noise
  std::optional<DataRecord> data;  ///< shared data for every run instead of per-run collection
};

struct ClosedLoopRun {
  Index run = 0;
  int attempts = 0;  ///< collection experiments (0 with shared data)
  ClosedLoopRecord record;
  double cost = 0.0;
  std::optional<ClosedLoopRecord> baseline;
  double baseline_cost = 0.0;
};

/// One Monte Carlo closed-loop run. Run r uses Rng(seed).stream(r): its
/// stream 0 collects data and stream 1 drives the plant noise. The loop
/// starts from the mean initial state and runs config.run.steps steps.
ClosedLoopRun run_closed_loop(const ScenarioConfig& config, std::uint64_t seed, Index run,
                              const ClosedLoopOptions& options);

std::vector<ClosedLoopRun> run_closed_loop_batch(const ScenarioConfig& config,
                                                 std::uint64_t seed, Index runs,
                                                 const ClosedLoopOptions& options,
                                                 Execution exec = Execution::Parallel);

}  // namespace ddspc
