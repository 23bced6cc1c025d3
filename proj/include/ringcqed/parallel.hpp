#pragma once

#include <cstddef>
#include <functional>

namespace ringcqed {

/// Worker count from RING_CQED_WORKERS, else the hardware concurrency (>= 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads (0 = worker_count()).
/// Each index is processed exactly once; the first exception is rethrown after
/// all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = 0);

}  // namespace ringcqed
