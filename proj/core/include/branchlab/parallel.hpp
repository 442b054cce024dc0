#pragma once

// Fixed-partition parallel loops. Work is split into index chunks that do not
// depend on the thread count, so reductions performed chunk-by-chunk in index
// order are reproducible bit-for-bit.

#include <cstddef>
#include <functional>
#include <vector>

namespace branchlab {

/// Worker count: BRANCHLAB_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(int threads);

/// Calls body(i) for i in [0, count). Bodies must not share mutable state.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Sum of f(i) over [0, count), accumulated per index then summed in order.
double parallel_sum(std::size_t count, const std::function<double(std::size_t)>& f);

}  // namespace branchlab
