#pragma once

#include <cstddef>
#include <functional>

namespace kpz {

// Worker cap: set_thread_cap wins, then KPZ_THREADS, then hardware concurrency.
int thread_cap();
void set_thread_cap(int n);

// Runs body(i) for i in [0,n). Work is split into contiguous blocks, so callers
// that write into per-index slots and reduce afterwards stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace kpz
