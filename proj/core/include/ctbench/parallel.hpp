#pragma once

#include <cstdint>
#include <functional>

namespace ctbench {

/// Process-wide worker cap (CLI --threads). 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn over [begin, end) split into contiguous blocks, one per worker.
/// Workers write disjoint outputs only; results must not depend on the split.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

} // namespace ctbench
