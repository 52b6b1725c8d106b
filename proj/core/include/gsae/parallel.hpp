#pragma once

#include <cstddef>
#include <functional>

namespace gsae {

// Global worker count used by the blocked helpers below. 0 restores the
// hardware default. Thread count never changes results, only wall time.
void set_thread_count(int n);
int thread_count();

std::size_t num_blocks(std::size_t count, std::size_t block_size);

// Runs f(block, begin, end) for every fixed-size block of [0, count).
// Block boundaries depend only on block_size, so a caller that writes each
// block's result into its own slot and folds the slots in block order gets
// output independent of the thread count.
void parallel_blocks(std::size_t count, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& f);

}  // namespace gsae
