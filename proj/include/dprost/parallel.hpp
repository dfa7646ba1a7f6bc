#pragma once

#include <cstdint>
#include <functional>

namespace dprost {

// Thread count resolution: explicit argument > DPROST_THREADS env > hardware.
int default_thread_count();

// Runs fn(begin, end) over a static partition of [0, n). Deterministic: every
// index is processed exactly once and outputs must be written to disjoint
// slots, so results are identical for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                  int threads = 0);

}  // namespace dprost
