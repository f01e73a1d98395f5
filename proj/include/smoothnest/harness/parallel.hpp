#pragma once

#include <cstddef>
#include <functional>

namespace smoothnest {

/// Worker count: SMOOTHNEST_THREADS when set to a positive integer, else
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Tasks are
/// handed out in index order; callers write results into per-index slots
/// so the outcome does not depend on scheduling. The first exception thrown
/// by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t workers = 0);

}  // namespace smoothnest
