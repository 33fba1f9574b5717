#pragma once

#include <cstddef>
#include <functional>

namespace hiercdm {

/// Worker count from HIERCDM_THREADS, else hardware concurrency (>= 1).
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Callers write results by index, so the outcome never depends on the
/// schedule. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace hiercdm
