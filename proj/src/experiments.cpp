#include "ddspc/experiments.hpp"

#include "ddspc/hankel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

namespace ddspc {

CollectionSettings collection_settings(const ScenarioConfig& config) {
  CollectionSettings s;
  s.T = config.data.T;
  s.T_est = config.data.T_est;
  s.N = config.ocp.N;
  s.input_box = config.data.input_box;
  s.prior_gain = config.data.prior_gain;
  s.x0 = Vec::Zero(config.nx());
  s.max_retries = config.data.max_retries;
  return s;
}

CollectedData collect_scenario_data(const ScenarioConfig& config, const Rng& rng) {
  return collect_until_pe(config.system(), config.noise.spec(), collection_settings(config), rng);
}

OpenLoopProblem open_loop_problem(const ScenarioConfig& config) {
  OpenLoopProblem p;
  p.basis = std::make_shared<const JointBasis>(config.basis(true));
  p.x_init = config.initial.kind == InitialStateConfig::Kind::Deterministic
                 ? pin_initial_state(p.basis, config.initial.value)
                 : canonical_initial_pce(p.basis);
  p.w = canonical_noise_trajectory(p.basis);
  return p;
}

OpenLoopResult solve_open_loop(const ScenarioConfig& config, const OpenLoopProblem& problem,
                               OcpForm form, const DataRecord* data,
                               const SolveSettings& settings) {
  OpenLoopResult r;
  if (form == OcpForm::ModelBased) {
    r.program = build_model_based(config.system(), config.ocp, *problem.basis, problem.x_init,
                                  problem.w);
  } else {
    require(data != nullptr, "data-driven forms need a data record");
    r.program = build_data_driven(*data, config.ocp, *problem.basis, problem.x_init, problem.w);
    if (form == OcpForm::DataDrivenReduced) {
      const Mat Hw = HankelMatrix(data->w_hat, config.ocp.N).matrix();
      r.program = std::move(apply_nullspace_reduction(r.program, Hw, problem.w).program);
    }
  }
  PresolvedProgram pre(r.program);
  r.reduced_dim = pre.reduced_dim();
  r.solution = extract_solution(r.program, problem.basis, pre.solve(settings));
  return r;
}

MomentSeries moment_series(const PceTrajectory& trajectory) {
  MomentSeries m;
  m.mean.resize(trajectory.length(), trajectory.dim());
  m.variance.resize(trajectory.length(), trajectory.dim());
  for (Index i = 0; i < trajectory.length(); ++i) {
    const auto [mean, var] = moments(trajectory.at(i));
    m.mean.row(i) = mean.transpose();
    m.variance.row(i) = var.transpose();
  }
  return m;
}

namespace {

constexpr Index kSampleBlock = 4096;

// Power sums of d = x - shift; blocks merge by addition.
struct BlockSums {
  Index n = 0;
  std::array<Mat, 4> s;
  Mat outside;
};

}  // namespace

SampledMoments sample_policy(const LtiSystem& system, const PceVector& x_init,
                             const PceTrajectory& u, const PceTrajectory& w, Index samples,
                             std::uint64_t seed, Execution exec, const ChanceBox* box) {
  require(samples >= 2, "at least two samples are needed");
  require(static_cast<bool>(x_init.basis), "initial state needs a basis");
  require(w.length() >= u.length(), "noise expansion is shorter than the input expansion");
  const JointBasis& basis = *x_init.basis;
  const Index steps = u.length();
  const Index nx = system.nx();
  require_dims(x_init.dim() == nx, "initial state has the wrong size");
  if (box != nullptr) require_dims(box->dim() == nx, "box has the wrong size");

  // Shift: the realization with every germ polynomial at its mean.
  Vec phi_mean = Vec::Zero(basis.total_terms());
  phi_mean(0) = 1.0;
  Mat shift(steps, nx);
  {
    Vec x = x_init.coefficients.transpose() * phi_mean;
    for (Index i = 0; i < steps; ++i) {
      shift.row(i) = x.transpose();
      x = step_realization(system, x, u.steps[static_cast<size_t>(i)].transpose() * phi_mean,
                           w.steps[static_cast<size_t>(i)].transpose() * phi_mean);
    }
  }

  const Index blocks = (samples + kSampleBlock - 1) / kSampleBlock;
  std::vector<BlockSums> sums(static_cast<size_t>(blocks));
  const Rng root(seed);
  for_each_index(blocks, exec, [&](Index b) {
    Rng rng = root.stream(static_cast<std::uint64_t>(b));
    BlockSums& s = sums[static_cast<size_t>(b)];
    for (Mat& m : s.s) m = Mat::Zero(steps, nx);
    s.outside = Mat::Zero(steps, nx);
    s.n = std::min(kSampleBlock, samples - b * kSampleBlock);
    for (Index k = 0; k < s.n; ++k) {
      const Vec phi = basis.evaluate(basis.sample_germ(rng));
      Vec x = x_init.coefficients.transpose() * phi;
      for (Index i = 0; i < steps; ++i) {
        for (Index c = 0; c < nx; ++c) {
          const double d = x(c) - shift(i, c);
          const double d2 = d * d;
          s.s[0](i, c) += d;
          s.s[1](i, c) += d2;
          s.s[2](i, c) += d2 * d;
          s.s[3](i, c) += d2 * d2;
          if (box != nullptr && (x(c) < box->lower(c) || x(c) > box->upper(c))) {
            s.outside(i, c) += 1.0;
          }
        }
        const Vec ui = u.steps[static_cast<size_t>(i)].transpose() * phi;
        const Vec wi = w.steps[static_cast<size_t>(i)].transpose() * phi;
        x = step_realization(system, x, ui, wi);
      }
    }
  });
  BlockSums total = sums.front();
  for (size_t b = 1; b < sums.size(); ++b) {
    total.n += sums[b].n;
    for (size_t p = 0; p < 4; ++p) total.s[p] += sums[b].s[p];
    total.outside += sums[b].outside;
  }
  const double n = static_cast<double>(total.n);
  SampledMoments out;
  out.samples = total.n;
  out.mean.resize(steps, nx);
  out.variance.resize(steps, nx);
  out.mean_se.resize(steps, nx);
  out.variance_se.resize(steps, nx);
  for (Index i = 0; i < steps; ++i) {
    for (Index c = 0; c < nx; ++c) {
      const double a = total.s[0](i, c) / n;
      const double r2 = total.s[1](i, c) / n;
      const double r3 = total.s[2](i, c) / n;
      const double r4 = total.s[3](i, c) / n;
      const double m2 = std::max(0.0, r2 - a * a);
      const double m4 = std::max(0.0, r4 - 4.0 * a * r3 + 6.0 * a * a * r2 - 3.0 * a * a * a * a);
      out.mean(i, c) = shift(i, c) + a;
      out.variance(i, c) = m2 * n / (n - 1.0);
      out.mean_se(i, c) = std::sqrt(m2 / n);
      out.variance_se(i, c) = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    }
  }
  out.violation = total.outside / n;
  return out;
}

ClosedLoopRun run_closed_loop(const ScenarioConfig& config, std::uint64_t seed, Index run,
                              const ClosedLoopOptions& options) {
  const Rng rng = Rng(seed).stream(static_cast<std::uint64_t>(run));
  ClosedLoopRun out;
  out.run = run;
  DataRecord data;
  if (options.data) {
    data = *options.data;
  } else {
    CollectedData c = collect_scenario_data(config, rng.stream(0));
    out.attempts = c.attempts;
    data = std::move(c.data);
  }
  const auto basis = std::make_shared<const JointBasis>(config.basis(false));
  const LtiSystem plant = config.system();
  const NoiseSpec noise = config.noise.spec();
  const Vec x0 = config.initial.mean();
  const MpcController controller(data, config.ocp, basis, options.exact_noise);
  out.record = run_mpc(plant, noise, controller, config.ocp, x0, config.run.steps, rng.stream(1));
  out.cost = evaluate_performance(out.record, config.ocp.Q, config.ocp.R).total;
  if (options.compare && !options.exact_noise) {
    const MpcController exact(data, config.ocp, basis, true);
    out.baseline = run_mpc(plant, noise, exact, config.ocp, x0, config.run.steps, rng.stream(1));
    out.baseline_cost = evaluate_performance(*out.baseline, config.ocp.Q, config.ocp.R).total;
  }
  return out;
}

std::vector<ClosedLoopRun> run_closed_loop_batch(const ScenarioConfig& config,
                                                 std::uint64_t seed, Index runs,
                                                 const ClosedLoopOptions& options,
                                                 Execution exec) {
  require(runs >= 1, "runs must be positive");
  std::vector<ClosedLoopRun> out(static_cast<size_t>(runs));
  for_each_index(runs, exec, [&](Index r) {
    out[static_cast<size_t>(r)] = run_closed_loop(config, seed, r, options);
  });
  return out;
}

}  // namespace ddspc
