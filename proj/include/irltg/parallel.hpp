#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace irltg {

// Runs fn(i) for i in [0, n) across up to `threads` workers. Items write only
// their own slot, so results are identical for any thread count; callers do
// all floating-point reductions serially in index order afterwards.
inline void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      // Contiguous block per worker; block boundaries depend only on n and
      // the worker count, never on timing.
      const size_t lo = n * w / workers;
      const size_t hi = n * (w + 1) / workers;
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace irltg
