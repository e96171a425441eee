#pragma once

#include "ddspc/types.hpp"

#include <exception>
#include <mutex>

namespace ddspc {

enum class Execution { Serial, Parallel };

/// Calls f(i) for i in [0, n). The parallel path uses OpenMP with a dynamic
/// schedule; results must not depend on the order of calls. The first
/// exception thrown by any f(i) is rethrown after the loop.
template <class F>
void for_each_index(Index n, Execution exec, F&& f) {
  if (exec == Execution::Serial) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace ddspc
