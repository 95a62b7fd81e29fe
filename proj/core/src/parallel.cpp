#include "aed/parallel.hpp"

#include <atomic>
#include <algorithm>
#include <thread>
#include <vector>

namespace aed {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int n) { g_workers.store(n < 0 ? 0 : n); }

int worker_count() {
  int n = g_workers.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const int workers =
      static_cast<int>(std::min<std::size_t>(worker_count(), n_blocks));

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(begin + block_size, n);
    fn(b, begin, end);
  };

  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= n_blocks) break;
        run_block(b);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  parallel_blocks(n, 1, [&](std::size_t, std::size_t begin, std::size_t) {
    fn(begin);
  });
}

}  // namespace aed
