#pragma once

#include <cstddef>
#include <functional>

namespace fca {

// Number of workers to use when the caller passes 0.
unsigned default_thread_count();

// Runs body(task) for task in [0, tasks) on up to `threads` workers. Tasks
// are claimed dynamically, so a task must write only to its own outputs.
// The first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t tasks, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace fca
