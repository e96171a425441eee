#pragma once

#include "ddspc/lti_sim.hpp"
#include "ddspc/ocp_builder.hpp"
#include "ddspc/pce_basis.hpp"
#include "ddspc/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddspc {

/// Configuration error with the offending field and source position.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message, int line = -1,
              int column = -1);
  const std::string& field() const { return field_; }
  /// Message without the position and field prefix.
  const std::string& message() const { return message_; }
  int line() const { return line_; }

 private:
  std::string field_;
  std::string message_;
  int line_;
};

struct NoiseConfig {
  NoiseSpec::Kind kind = NoiseSpec::Kind::GaussianDiag;
  Vec params;  ///< variances (gaussian) or half-widths (uniform)

  NoiseSpec spec() const;
};

/// Distribution of the initial state of the open-loop problem.
struct InitialStateConfig {
  enum class Kind { Deterministic, Uniform, Gaussian };
  Kind kind = Kind::Deterministic;
  Vec value;  ///< deterministic value / uniform lower / gaussian mean
  Vec second; ///< uniform upper / gaussian stddev

  /// Germ family of the initial state; empty when deterministic.
  std::optional<GermFamily> germ() const;
  Vec mean() const;
};

struct DataConfig {
  Index T = 150;       ///< samples used in the Hankel matrices
  Index T_est = 1000;  ///< extra leading samples used only by the noise estimator
  InputBox input_box;
  Mat prior_gain;      ///< optional u = -K x + excitation during collection
  std::uint64_t seed = 1;
  int max_retries = 10;
};

enum class RunMode { OpenLoop, Mpc };
enum class NoiseSource { Estimated, Exact };

struct RunConfig {
  RunMode mode = RunMode::OpenLoop;
  Index steps = 50;
  Index runs = 1;
  NoiseSource noise_source = NoiseSource::Estimated;
};

struct ScenarioConfig {
  std::string name;
  Mat A;
  Mat B;
  NoiseConfig noise;
  InitialStateConfig initial;
  OcpSpec ocp;
  DataConfig data;
  RunConfig run;

  LtiSystem system() const { return LtiSystem(A, B); }
  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  /// Horizon basis: initial-state block from `initial` (open loop) or none (mpc).
  JointBasis basis(bool with_initial_state) const;
  void validate() const;
};

/// Names accepted by preset(): scalar-gaussian (alias scalar), scalar-uniform, aircraft.
std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);

/// Parses a YAML scenario. A top-level `preset:` key selects the base values,
/// which explicit fields override. Throws ConfigError with line information.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

/// Writes a scenario as YAML that parse_scenario reads back. With
/// `annotate`, each value carries a comment naming its origin.
void write_scenario(const ScenarioConfig& config, std::ostream& out, bool annotate = false);

}  // namespace ddspc
