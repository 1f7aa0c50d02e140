#pragma once

#include <cstddef>
#include <functional>

namespace squeezesim {

/// Worker count for sweeps and maps: SQUEEZESIM_THREADS if set and positive,
/// otherwise std::thread::hardware_concurrency() (at least 1).
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
/// visited exactly once; callers write results into pre-sized slots so the
/// output order never depends on scheduling. The first exception thrown by
/// any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace squeezesim
