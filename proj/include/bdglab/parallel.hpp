#pragma once

#include <cstddef>
#include <functional>

namespace bdglab {

// Worker count: an explicit override if set, else BDGLAB_WORKERS, else 1.
int worker_count();
void set_worker_count(int workers);  // 0 clears the override

/// Runs fn(0..n-1) on up to worker_count() threads.
///
/// Work items must write only to their own output slot; callers reduce the
/// slots in index order afterwards, which keeps results independent of the
/// worker count. Nested calls from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bdglab
