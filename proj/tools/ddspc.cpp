#include "ddspc/acceptance.hpp"
#include "ddspc/artifacts.hpp"
#include "ddspc/experiments.hpp"
#include "ddspc/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ddspc;

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kPersistency = 3, kData = 4 };

struct CommonOptions {
  std::string preset_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<Index> runs;
  std::optional<Index> T;
  std::string out_dir;
  std::string data_path;
  bool exact_noise = false;
  bool print_preset = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool uses_data) {
  cmd->add_option("--preset", o.preset_name, "Named scenario: scalar-gaussian (scalar), scalar-uniform, aircraft");
  cmd->add_option("--config", o.config_path, "Scenario YAML file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Overrides data.seed");
  cmd->add_option("--runs", o.runs, "Overrides run.runs")->check(CLI::PositiveNumber);
  cmd->add_option("--T", o.T, "Overrides data.T");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (default $DDSPC_OUT_DIR, else ./ddspc_out)");
  cmd->add_flag("--exact-noise", o.exact_noise, "Use the recorded true noise instead of estimates");
  cmd->add_flag("--print-preset", o.print_preset, "Print the resolved scenario with value origins and exit");
  if (uses_data) {
    cmd->add_option("--data", o.data_path, "Data file written by 'collect' (collects afresh when omitted)")
        ->check(CLI::ExistingFile);
  }
}

ScenarioConfig resolve(const CommonOptions& o) {
  if (o.preset_name.empty() && o.config_path.empty()) {
    throw UsageError("one of --preset or --config is required");
  }
  if (!o.preset_name.empty() && !o.config_path.empty()) {
    throw UsageError("--preset and --config are exclusive; use 'preset:' inside the file");
  }
  ScenarioConfig c = o.config_path.empty() ? preset(o.preset_name) : load_scenario(o.config_path);
  if (o.seed) c.data.seed = *o.seed;
  if (o.runs) c.run.runs = *o.runs;
  if (o.T) c.data.T = *o.T;
  if (o.exact_noise) c.run.noise_source = NoiseSource::Exact;
  c.validate();
  return c;
}

fs::path output_dir(const CommonOptions& o) {
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("DDSPC_OUT_DIR");
    dir = (env != nullptr && *env != '\0') ? fs::path(env) : fs::path("ddspc_out");
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

DataFile load_or_collect(const ScenarioConfig& c, const CommonOptions& o) {
  if (!o.data_path.empty()) {
    std::ifstream in(o.data_path, std::ios::binary);
    DataFile f = read_data_file(in);
    if (f.data.nx() != c.nx() || f.data.nu() != c.nu()) {
      throw std::runtime_error("data file " + o.data_path + " does not match the scenario dimensions");
    }
    return f;
  }
  CollectedData col = collect_scenario_data(c, Rng(c.data.seed));
  DataFile f;
  f.scenario = c.name;
  f.seed = c.data.seed;
  f.attempts = col.attempts;
  f.projector_residual = col.estimation.projector_residual;
  f.data = std::move(col.data);
  return f;
}

DataRecord control_data(const DataFile& f, const ScenarioConfig& c) {
  if (c.run.noise_source != NoiseSource::Exact) return f.data;
  if (!f.data.w_true) throw std::runtime_error("exact-noise control needs w_true in the data file");
  return f.data.with_exact_noise();
}

int cmd_collect(const CommonOptions& o) {
  const ScenarioConfig c = resolve(o);
  const DataFile f = load_or_collect(c, CommonOptions{});
  const fs::path dir = output_dir(o);
  auto out = open_out(dir / "data.json");
  write_data_file(out, f);
  std::cout << "collected " << f.data.length() << " samples for " << c.name << " (seed " << f.seed
            << ", " << f.attempts << " experiment(s), projector residual "
            << format_double(f.projector_residual) << ") -> " << (dir / "data.json").string() << "\n";
  return kOk;
}

int cmd_solve_ocp(const CommonOptions& o, bool model_based, bool full) {
  const ScenarioConfig c = resolve(o);
  const OpenLoopProblem problem = open_loop_problem(c);
  OpenLoopResult r;
  std::string form = "model-based";
  if (model_based) {
    r = solve_open_loop(c, problem, OcpForm::ModelBased, nullptr);
  } else {
    const DataFile f = load_or_collect(c, o);
    const DataRecord d = control_data(f, c);
    form = full ? "data-driven" : "data-driven-reduced";
    r = solve_open_loop(c, problem, full ? OcpForm::DataDriven : OcpForm::DataDrivenReduced, &d);
  }
  const fs::path dir = output_dir(o);
  {
    auto out = open_out(dir / "solution.csv");
    write_solution_csv(out, r.solution);
  }
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, r.solution);
  }
  const SolveReport& rep = r.solution.report;
  nlohmann::ordered_json j;
  j["scenario"] = c.name;
  j["form"] = form;
  j["noise"] = c.run.noise_source == NoiseSource::Exact ? "exact" : "estimated";
  j["seed"] = c.data.seed;
  j["status"] = status_name(rep.status);
  j["objective"] = r.solution.objective;
  j["iterations"] = rep.iterations;
  j["variables"] = r.program.num_vars();
  j["reduced_dim"] = r.reduced_dim;
  {
    auto out = open_out(dir / "report.json");
    out << j.dump(1) << "\n";
  }
  std::cout << c.name << " " << form << ": " << status_name(rep.status) << ", objective "
            << format_double(r.solution.objective) << " -> " << dir.string() << "\n";
  return rep.status == SolveStatus::Optimal ? kOk : kFailed;
}

int cmd_mpc(const CommonOptions& o, bool compare, bool serial) {
  ScenarioConfig c = resolve(o);
  ClosedLoopOptions opts;
  opts.exact_noise = c.run.noise_source == NoiseSource::Exact;
  opts.compare = compare;
  if (!o.data_path.empty()) opts.data = load_or_collect(c, o).data;
  const auto runs = run_closed_loop_batch(c, c.data.seed, c.run.runs, opts,
                                          serial ? Execution::Serial : Execution::Parallel);
  const fs::path dir = output_dir(o);
  fs::create_directories(dir / "runs");
  std::vector<ClosedLoopRecord> records;
  Index aborted = 0;
  double total = 0.0;
  double gap = 0.0;
  Index compared = 0;
  {
    auto perf = open_out(dir / "performance.csv");
    perf << "run,attempts,steps,aborted,cost";
    if (compare) perf << ",baseline_cost,relative_gap";
    perf << "\n";
    for (const auto& r : runs) {
      char name[64];
      std::snprintf(name, sizeof name, "run_%04ld.csv", static_cast<long>(r.run));
      {
        auto out = open_out(dir / "runs" / name);
        write_trajectory_csv(out, r.record);
      }
      perf << r.run << ',' << r.attempts << ',' << r.record.steps.size() << ','
           << (r.record.aborted ? 1 : 0) << ',' << format_double(r.cost);
      if (compare && r.baseline) {
        std::snprintf(name, sizeof name, "baseline_%04ld.csv", static_cast<long>(r.run));
        auto out = open_out(dir / "runs" / name);
        write_trajectory_csv(out, *r.baseline);
        const double rel = (r.cost - r.baseline_cost) / r.baseline_cost;
        perf << ',' << format_double(r.baseline_cost) << ',' << format_double(rel);
        if (!r.record.aborted && !r.baseline->aborted) {
          gap += rel;
          ++compared;
        }
      }
      perf << "\n";
      if (r.record.aborted) {
        ++aborted;
        std::cerr << "run " << r.run << " aborted: " << r.record.abort_reason << "\n";
      } else {
        total += r.cost;
      }
      records.push_back(r.record);
    }
  }
  std::vector<Index> steps;
  for (Index k = 0; k <= c.run.steps; ++k) steps.push_back(k);
  std::vector<std::vector<Histogram>> hist;
  for (Index comp = 0; comp < c.nx(); ++comp) hist.push_back(histogram_export(records, comp, steps));
  {
    auto out = open_out(dir / "histogram.csv");
    write_histogram_csv(out, hist);
  }
  const Index done = static_cast<Index>(runs.size()) - aborted;
  std::cout << c.name << " mpc: " << runs.size() << " runs, " << aborted << " aborted, mean cost "
            << (done > 0 ? format_double(total / static_cast<double>(done)) : "n/a");
  if (compared > 0) {
    std::cout << ", mean relative gap to exact noise " << format_double(gap / static_cast<double>(compared));
  }
  std::cout << " -> " << dir.string() << "\n";
  return aborted == 0 ? kOk : kFailed;
}

int cmd_verify(const CommonOptions& o, const std::vector<int>& only, bool serial) {
  AcceptanceOptions a;
  if (o.seed) a.seed = *o.seed;
  if (o.runs) a.closed_loop_runs = *o.runs;
  a.exec = serial ? Execution::Serial : Execution::Parallel;
  std::vector<int> ids = only;
  if (ids.empty()) {
    for (int id = 1; id <= kCriterionCount; ++id) ids.push_back(id);
  }
  const fs::path dir = output_dir(o);
  auto out = open_out(dir / "verify.txt");
  int failed = 0;
  for (int id : ids) {
    const CriterionResult r = run_criterion(id, a);
    std::cout << format_result(r) << std::endl;
    out << format_result(r) << "\n";
    if (!r.pass) ++failed;
  }
  return failed == 0 ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven stochastic MPC experiments"};
  app.require_subcommand(1);
  CommonOptions o;
  bool model_based = false;
  bool full = false;
  bool compare = false;
  bool serial = false;
  std::vector<int> only;

  CLI::App* collect = app.add_subcommand("collect", "Collect excitation data and estimate the noise");
  add_common(collect, o, false);
  CLI::App* solve = app.add_subcommand("solve-ocp", "Solve one open-loop stochastic OCP");
  add_common(solve, o, true);
  solve->add_flag("--model-based", model_based, "Solve the model-based program instead");
  solve->add_flag("--full", full, "Skip the noise null-space reduction");
  CLI::App* mpc = app.add_subcommand("mpc", "Monte Carlo closed-loop runs");
  add_common(mpc, o, true);
  mpc->add_flag("--compare", compare, "Also run the exact-noise controller on the same data and noise");
  mpc->add_flag("--serial", serial, "Run the Monte Carlo runs without OpenMP");
  CLI::App* verify = app.add_subcommand("verify", "Run the acceptance suite");
  add_common(verify, o, false);
  verify->add_option("--only", only, "Criteria to run")->check(CLI::Range(1, kCriterionCount));
  verify->add_flag("--serial", serial, "Run without OpenMP");

  CLI11_PARSE(app, argc, argv);

  try {
    if (o.print_preset) {
      write_scenario(resolve(o), std::cout, true);
      return kOk;
    }
    if (collect->parsed()) return cmd_collect(o);
    if (solve->parsed()) return cmd_solve_ocp(o, model_based, full);
    if (mpc->parsed()) return cmd_mpc(o, compare, serial);
    if (verify->parsed()) return cmd_verify(o, only, serial);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  } catch (const PersistencyError& e) {
    std::cerr << "persistency error (required order " << e.required_order() << "): " << e.what()
              << "\n";
    return kPersistency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kFailed;
}
