#pragma once

#include <cstdint>
#include <functional>

namespace myinet {

// Worker count for kernel-level parallelism. Kernels split work so that every
// output element is written by exactly one worker in a fixed order, which
// makes results bit-identical for any thread count.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end). Work is split into contiguous chunks,
// one per worker. With one thread this is a plain loop on the caller.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

}  // namespace myinet
