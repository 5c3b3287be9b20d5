#pragma once

#include <cstddef>
#include <functional>

namespace loglap {

// worker count: LOGLAP_THREADS if set and positive, else hardware concurrency
unsigned worker_count();

// Runs body(i) for i in [0, n) over contiguous blocks. Each index is
// visited exactly once, so disjoint writes give thread-count independent results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace loglap
