#pragma once

#include "ddspc/conic_solver.hpp"
#include "ddspc/lti_sim.hpp"
#include "ddspc/mpc_loop.hpp"
#include "ddspc/ocp_builder.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ddspc {

/// Shortest decimal that reads back to the same double; '.' decimal point
/// regardless of locale.
std::string format_double(double value);

/// step,coefficient,role,component,value for every x and u coefficient.
void write_solution_csv(std::ostream& out, const OcpSolution& solution);

/// step,role,component,mean,variance for x and u.
void write_summary_csv(std::ostream& out, const OcpSolution& solution);

/// step,x<c>...,u<c>...,w<c>...,stage_cost,status,iterations. The final row
/// holds the terminal state with empty input and noise fields.
void write_trajectory_csv(std::ostream& out, const ClosedLoopRecord& record);

/// step,component,bin,lower,upper,mass for the histograms of every component.
void write_histogram_csv(std::ostream& out, const std::vector<std::vector<Histogram>>& per_component);

struct DataFile {
  std::string scenario;
  std::uint64_t seed = 0;
  int attempts = 0;
  double projector_residual = 0.0;
  DataRecord data;  ///< w_hat estimated, w_true recorded
};

/// JSON with round-trip exact numbers.
void write_data_file(std::ostream& out, const DataFile& file);
/// Throws std::runtime_error naming the missing or malformed field.
DataFile read_data_file(std::istream& in);

}  // namespace ddspc
