#pragma once

#include <cstddef>
#include <functional>

namespace sphereflow {

// Worker count resolution: SPHEREFLOW_THREADS env var if set (>=1), else
// hardware concurrency. Partitioning is static and contiguous, so results
// are bitwise independent of the worker count as long as each index writes
// only its own outputs (all call sites keep reductions serial).
int thread_count();

// Runs fn(i) for i in [0, n). Serial for small n or a single worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace sphereflow
