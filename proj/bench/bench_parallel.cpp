#include "ddspc/experiments.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <memory>

using namespace ddspc;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const Index samples = argc > 1 ? std::atol(argv[1]) : 200000;
  const Index runs = argc > 2 ? std::atol(argv[2]) : 4;
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());

  const ScenarioConfig cfg = preset("scalar-gaussian");
  const OpenLoopProblem p = open_loop_problem(cfg);
  const DataRecord data = collect_scenario_data(cfg, Rng(1)).data.with_exact_noise();
  const OpenLoopResult r = solve_open_loop(cfg, p, OcpForm::DataDrivenReduced, &data);

  SampledMoments serial;
  SampledMoments parallel;
  const double ts = seconds([&] {
    serial = sample_policy(cfg.system(), p.x_init, r.solution.u, p.w, samples, 7, Execution::Serial);
  });
  const double tp = seconds([&] {
    parallel = sample_policy(cfg.system(), p.x_init, r.solution.u, p.w, samples, 7, Execution::Parallel);
  });
  std::printf("sample_policy  %ld samples: serial %.3f s, parallel %.3f s, speedup %.2f, identical %s\n",
              static_cast<long>(samples), ts, tp, ts / tp,
              serial.mean == parallel.mean && serial.variance == parallel.variance ? "yes" : "no");

  const ScenarioConfig air = preset("aircraft");
  std::vector<ClosedLoopRun> a;
  std::vector<ClosedLoopRun> b;
  const double cs = seconds([&] { a = run_closed_loop_batch(air, 3, runs, {}, Execution::Serial); });
  const double cp = seconds([&] { b = run_closed_loop_batch(air, 3, runs, {}, Execution::Parallel); });
  bool same = a.size() == b.size();
  for (size_t i = 0; same && i < a.size(); ++i) same = a[i].cost == b[i].cost;
  std::printf("closed loop    %ld aircraft runs: serial %.3f s, parallel %.3f s, speedup %.2f, identical %s\n",
              static_cast<long>(runs), cs, cp, cs / cp, same ? "yes" : "no");
  return 0;
}
