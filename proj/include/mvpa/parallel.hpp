#pragma once

#include <cstddef>
#include <functional>

namespace mvpa {

// Runs fn(i) for i in [0, count). With n_threads > 1, workers pull indices
// from a shared atomic counter. Tasks must write only to their own output
// slot; combined with per-task seeds this makes results independent of the
// thread count and of scheduling order.
//
// Exceptions thrown by tasks are captured; the first one (by task index) is
// rethrown after all workers have joined.
void parallel_for(std::size_t count, int n_threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace mvpa
