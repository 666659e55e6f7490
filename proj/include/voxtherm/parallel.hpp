#pragma once

#include <cstddef>
#include <functional>

namespace voxtherm {

/// Worker count used when a caller passes 0: VOXTHERM_THREADS if set,
/// otherwise 1.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Items are
/// independent; callers write results into per-index slots so the outcome
/// never depends on scheduling. The first exception thrown by any item is
/// rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace voxtherm
