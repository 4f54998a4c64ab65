#pragma once

#include <cstddef>
#include <functional>

namespace gravicat {

// Worker count used by parallel_for. Defaults to GRAVICAT_THREADS if set,
// otherwise std::thread::hardware_concurrency().
int num_threads();
void set_num_threads(int n);

// Runs body(i) for i in [0, n) over contiguous chunks. Each index is handled by
// exactly one worker, so per-index results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gravicat
