#pragma once

#include <cstddef>
#include <functional>

namespace glupruner {

// Worker cap: GLUPRUNER_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
std::size_t thread_count();

// Overrides the environment for the current process (0 restores it).
void set_thread_count(std::size_t threads);

// Runs body(begin, end) over contiguous chunks of [0, n). Callers must make
// each index's result independent of the chunking.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace glupruner
