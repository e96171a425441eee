#include "ddspc/mpc_loop.hpp"

#include "ddspc/hankel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ddspc {

Index minimum_samples(Index nx, Index nu, Index N) {
  const Index order = nx + N;
  return (nu + nx) * order + order - 1;
}

CollectedData collect_until_pe(const LtiSystem& plant, const NoiseSpec& noise,
                               const CollectionSettings& s, const Rng& rng) {
  const Index nx = plant.nx();
  const Index nu = plant.nu();
  const Index order = nx + s.N;
  require(s.N >= 1, "horizon N must be at least 1");
  require(s.T_est >= 0, "T_est must be nonnegative");
  require(s.max_retries >= 1, "max_retries must be at least 1");
  const Index t_min = minimum_samples(nx, nu, s.N);
  if (s.T < t_min) {
    throw PersistencyError("T = " + std::to_string(s.T) +
                               " samples cannot be persistently exciting of the required order " +
                               std::to_string(order) + " (n_x + N); at least " +
                               std::to_string(t_min) + " samples are needed",
                           order);
  }
  CollectionOptions opts;
  opts.prior_gain = s.prior_gain;
  opts.x0 = s.x0.size() > 0 ? s.x0 : Vec::Zero(nx);
  const Index total = s.T_est + s.T;
  std::string last_reason;
  for (int attempt = 0; attempt < s.max_retries; ++attempt) {
    Rng sub = rng.stream(static_cast<std::uint64_t>(attempt));
    const DataRecord full = collect_data(plant, noise, s.input_box, total, sub, opts);
    EstimationResult est;
    try {
      est = estimate_noise_ls(full.x, full.u);
    } catch (const PersistencyError& e) {
      last_reason = e.what();
      continue;
    }
    CollectedData out;
    out.data.x = full.x.middleRows(s.T_est, s.T + 1);
    out.data.u = full.u.middleRows(s.T_est, s.T);
    out.data.w_hat = est.w_hat.middleRows(s.T_est, s.T);
    out.data.w_true = full.w_true->middleRows(s.T_est, s.T);
    out.estimation = std::move(est);
    out.attempts = attempt + 1;
    if (is_persistently_exciting(stack_signals(out.data.u, out.data.w_hat), order)) return out;
    last_reason = "stacked (u, w_hat) data is not persistently exciting of order " +
                  std::to_string(order);
  }
  throw PersistencyError("no persistently exciting data of order " + std::to_string(order) +
                             " (n_x + N) after " + std::to_string(s.max_retries) +
                             " experiments; last: " + last_reason,
                         order);
}

// ---------------------------------------------------------------------------

struct MpcController::Impl {
  BasisPtr basis;
  ConicProgram program;
  PresolvedProgram presolved;
  Vec fixed_values;
  std::vector<Index> state_slots;  // fixed-vector position of x^0_{0, c}
  SolveSettings settings;

  Impl(ConicProgram p, BasisPtr b, SolveSettings st)
      : basis(std::move(b)), program(p), presolved(std::move(p)), settings(st) {}
};

SolveSettings MpcController::default_settings() {
  SolveSettings s;
  s.polish = false;
  return s;
}

MpcController::MpcController(const DataRecord& data, const OcpSpec& spec, BasisPtr basis,
                             bool use_true_noise, SolveSettings settings) {
  require(static_cast<bool>(basis), "basis is required");
  require(basis->initial_terms() == 0, "the receding-horizon basis has no initial-state block");
  require(basis->horizon() == spec.N, "basis horizon differs from N");
  DataRecord d = data;
  if (use_true_noise) {
    require(data.w_true.has_value(), "exact-noise control needs the recorded true noise");
    d.w_hat = *data.w_true;
  }
  const Index nx = d.nx();
  const PceVector x_init = pin_initial_state(basis, Vec::Zero(nx));
  const PceTrajectory w = canonical_noise_trajectory(basis);
  const ConicProgram dd = build_data_driven(d, spec, *basis, x_init, w);
  NullspaceReduction red = apply_nullspace_reduction(dd, HankelMatrix(d.w_hat, spec.N).matrix(), w);
  auto impl = std::make_shared<Impl>(std::move(red.program), basis, settings);
  const auto& fixed = impl->program.fixed;
  impl->fixed_values.resize(static_cast<Index>(fixed.size()));
  impl->state_slots.assign(static_cast<size_t>(nx), -1);
  for (size_t k = 0; k < fixed.size(); ++k) {
    impl->fixed_values(static_cast<Index>(k)) = fixed[k].value;
    for (Index c = 0; c < nx; ++c) {
      if (fixed[k].index == impl->program.layout.index(VarRole::X, 0, 0, c)) {
        impl->state_slots[static_cast<size_t>(c)] = static_cast<Index>(k);
      }
    }
  }
  for (Index slot : impl->state_slots) require(slot >= 0, "initial state is not a fixed variable");
  impl_ = std::move(impl);
}

MpcController::Step MpcController::solve(const Vec& x_k) const {
  const Impl& m = *impl_;
  require_dims(x_k.size() == static_cast<Index>(m.state_slots.size()), "state has the wrong size");
  Vec v = m.fixed_values;
  for (size_t c = 0; c < m.state_slots.size(); ++c) v(m.state_slots[c]) = x_k(static_cast<Index>(c));
  const SolveResult r = m.presolved.solve(v, m.settings);
  Step s;
  s.report = r.report;
  s.solution = extract_solution(m.program, m.basis, r);
  s.u = s.solution.u.steps.front().row(0).transpose();
  return s;
}

const ConicProgram& MpcController::program() const { return impl_->program; }
Index MpcController::reduced_dim() const { return impl_->presolved.reduced_dim(); }

// ---------------------------------------------------------------------------

ClosedLoopRecord run_mpc(const LtiSystem& plant, const NoiseSpec& noise,
                         const MpcController& controller, const OcpSpec& spec, const Vec& x0,
                         Index steps, Rng noise_rng) {
  require_dims(x0.size() == plant.nx(), "initial state has the wrong size");
  require(steps >= 0, "steps must be nonnegative");
  ClosedLoopRecord rec;
  Vec x = x0;
  for (Index k = 0; k < steps; ++k) {
    rec.states.push_back(x);
    const MpcController::Step s = controller.solve(x);
    StepRecord st;
    st.k = k;
    st.x = x;
    st.status = s.report.status;
    st.iterations = s.report.iterations;
    st.predicted_objective = s.solution.objective;
    if (s.report.status != SolveStatus::Optimal) {
      rec.steps.push_back(std::move(st));
      rec.aborted = true;
      rec.abort_reason = std::string("solver returned ") + status_name(s.report.status) +
                         " at step " + std::to_string(k);
      return rec;
    }
    st.u = s.u;
    st.w = noise.sample(noise_rng);
    st.stage_cost = x.dot(spec.Q * x) + st.u.dot(spec.R * st.u);
    x = step_realization(plant, x, st.u, st.w);
    rec.steps.push_back(std::move(st));
  }
  rec.states.push_back(x);
  return rec;
}

Performance evaluate_performance(const ClosedLoopRecord& record, const Mat& Q, const Mat& R) {
  require(!record.steps.empty(), "empty closed-loop record");
  Performance p;
  p.per_step = Vec::Zero(static_cast<Index>(record.steps.size()));
  for (size_t k = 0; k < record.steps.size(); ++k) {
    const StepRecord& s = record.steps[k];
    double c = s.x.dot(Q * s.x);
    if (s.u.size() > 0) c += s.u.dot(R * s.u);
    p.per_step(static_cast<Index>(k)) = c;
  }
  p.total = p.per_step.sum();
  return p;
}

std::vector<Histogram> histogram_export(const std::vector<ClosedLoopRecord>& records,
                                        Index component, const std::vector<Index>& steps,
                                        Index bins) {
  require(!records.empty(), "no closed-loop records");
  require(bins >= 1, "bins must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : records) {
    for (Index k : steps) {
      if (k < 0 || k >= static_cast<Index>(r.states.size())) continue;
      const double v = r.states[static_cast<size_t>(k)](component);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  require(lo <= hi, "no record reaches the requested steps");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const Vec edges = Vec::LinSpaced(bins + 1, lo, hi);
  std::vector<Histogram> out;
  for (Index k : steps) {
    Histogram h;
    h.step = k;
    h.edges = edges;
    h.mass = Vec::Zero(bins);
    Index n = 0;
    for (const auto& r : records) {
      if (k < 0 || k >= static_cast<Index>(r.states.size())) continue;
      const double v = r.states[static_cast<size_t>(k)](component);
      const Index b = std::min<Index>(bins - 1, static_cast<Index>((v - lo) / (hi - lo) * static_cast<double>(bins)));
      h.mass(b) += 1.0;
      ++n;
    }
    if (n > 0) h.mass /= static_cast<double>(n);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace ddspc
