#pragma once

#include <cstddef>
#include <functional>

namespace kinetik {

// Cap on worker threads (0 = hardware concurrency).
void set_thread_cap(unsigned n);
unsigned thread_cap();

// Runs fn(i) for i in [0, n). Each index must write only its own output slot;
// results are then independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace kinetik
