#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace mbm {

/// Number of worker threads used by the parallel loops.  Defaults to the
/// MBM_NUM_THREADS environment variable, else hardware concurrency.
std::size_t thread_count();

/// Overrides the thread count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n).  Each index is processed exactly once and
/// body must only write to index-owned storage, so results never depend on
/// the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (cascade) summation; the reduction tree depends only on the
/// length of the input.
double pairwise_sum(std::span<const double> values);

}  // namespace mbm
