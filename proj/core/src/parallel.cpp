#include "gsae/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "gsae/errors.hpp"

namespace gsae {
namespace {

std::atomic<int> g_threads{0};

int resolved_threads() {
  int n = g_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_thread_count(int n) {
  if (n < 0) throw ConfigError("thread count must be >= 0");
  g_threads.store(n);
}

int thread_count() { return resolved_threads(); }

std::size_t num_blocks(std::size_t count, std::size_t block_size) {
  if (block_size == 0) throw ConfigError("block_size must be > 0");
  return (count + block_size - 1) / block_size;
}

void parallel_blocks(std::size_t count, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& f) {
  const std::size_t blocks = num_blocks(count, block_size);
  if (blocks == 0) return;

  const int workers = std::min<std::size_t>(resolved_threads(), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b)
      f(b, b * block_size, std::min(count, (b + 1) * block_size));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks || failed.load()) return;
      try {
        f(b, b * block_size, std::min(count, (b + 1) * block_size));
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

}  // namespace gsae
