#pragma once

#include <cstddef>
#include <functional>

namespace bunching {

// Worker count from BUNCHING_WORKERS, else the hardware concurrency (at least 1).
int worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = worker_count()).
// Each index runs exactly once; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace bunching
