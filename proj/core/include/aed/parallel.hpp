// Block-wise parallel execution helper. Work is cut into fixed-size blocks
// that do not depend on the worker count; callers combine per-block outputs
// in block order, so results are identical for any number of workers.

#pragma once

#include <cstddef>
#include <functional>

namespace aed {

// Process-wide worker count. 0 means "use hardware concurrency".
void set_worker_count(int n);
int worker_count();

// Invokes fn(block_index, begin, end) for consecutive blocks covering
// [0, n). fn must only touch state owned by its block.
void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn);

// Convenience: one block per item.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t)>& fn);

}  // namespace aed
