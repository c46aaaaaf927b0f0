#pragma once

// Deterministic work partitioning. Every parallel site in the library either
// writes disjoint slots or reduces with max/fixed-tree sums, so results are
// byte-identical for any thread count.

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace eqz {

// 0 -> hardware concurrency (at least 1); otherwise the request itself.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(begin, end) over a partition of [0, n) into contiguous ranges.
inline void parallel_for(long n, int threads,
                         const std::function<void(long, long)>& body) {
  threads = std::min<long>(std::max(1, threads), std::max<long>(1, n));
  if (threads == 1 || n < 2) {
    if (n > 0) body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  long chunk = (n + threads - 1) / threads;
  for (int k = 0; k < threads; ++k) {
    long b = k * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace eqz
