#pragma once

#include <cstddef>
#include <functional>

namespace tabletop {

// Worker count from TABLETOP_LFD_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results into index-addressed slots so output order never depends on
// the schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tabletop
