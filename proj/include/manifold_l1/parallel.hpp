#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace manifold_l1 {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> threads{0};
  return threads;
}
}  // namespace detail

/// Caps internal parallelism. 0 selects MANIFOLD_L1_THREADS if set, else 1.
inline void set_num_threads(int threads) { detail::thread_setting() = std::max(0, threads); }

inline int num_threads() {
  int t = detail::thread_setting();
  if (t > 0) return t;
  if (const char* env = std::getenv("MANIFOLD_L1_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  return 1;
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Callers write
/// into disjoint per-index slots and reduce afterwards in index order, so
/// results do not depend on the thread count.
template <class Body>
void parallel_for_chunks(std::ptrdiff_t count, Body&& body) {
  const int threads = static_cast<int>(std::min<std::ptrdiff_t>(num_threads(), std::max<std::ptrdiff_t>(count, 1)));
  if (threads <= 1 || count < 1024) {
    body(std::ptrdiff_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::ptrdiff_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::ptrdiff_t begin = t * chunk;
    const std::ptrdiff_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace manifold_l1
