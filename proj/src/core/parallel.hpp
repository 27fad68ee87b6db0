#pragma once

#include <cstddef>
#include <functional>

namespace recap {

/// Upper bound on worker threads used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for every i in [0, n). Work items are claimed dynamically, so
/// callers must write results into per-index slots and reduce them afterwards
/// in index order; that keeps output independent of the thread count.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace recap
