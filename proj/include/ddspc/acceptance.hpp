#pragma once

#include "ddspc/parallel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ddspc {

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  Execution exec = Execution::Parallel;
  Index closed_loop_runs = 50;
  Index moment_samples = 100000;
  Index violation_samples = 10000;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline constexpr int kCriterionCount = 10;

/// Runs criterion `id` in 1..10. Exceptions become a failing result.
CriterionResult run_criterion(int id, const AcceptanceOptions& options);

/// One line: "PASS|FAIL criterion <id> <name>: <detail> (<seconds> s)".
std::string format_result(const CriterionResult& result);

}  // namespace ddspc
