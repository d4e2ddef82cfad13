#pragma once

#include <cstddef>
#include <functional>

namespace slscan {

// Worker count: SLSCAN_THREADS when set to a positive integer, otherwise the
// number of logical cores.
std::size_t worker_count();

// Override for tests and the CLI; 0 restores the environment default.
void set_worker_count(std::size_t n);

// Runs body(begin, end) over contiguous, disjoint chunks of [0, n). Chunk
// boundaries depend only on n and the worker count, and bodies must write to
// disjoint outputs, so results are scheduling independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace slscan
