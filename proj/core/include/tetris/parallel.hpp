#pragma once

#include <cstddef>
#include <functional>

namespace tetris {

// Global cap on worker threads. 0 means "hardware concurrency". Setting the
// environment variable TETRIS_SINGLE_THREAD=1 forces one worker regardless.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs body(i) for i in [0, count) on up to max_threads() workers. Each index
// is processed exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace tetris
