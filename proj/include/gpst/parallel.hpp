#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gpst {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap{0};  // 0 = hardware concurrency
  return cap;
}
}  // namespace detail

// Caps the worker count used by render/backward. 0 restores the default
// (hardware concurrency). Partitioning of work is thread-count independent,
// so results are bit-identical under any cap.
inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads() {
  unsigned cap = detail::thread_cap().load();
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

// Runs fn(i) for i in [0, n). Each index is processed by exactly one worker.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  unsigned workers = std::min<size_t>(max_threads(), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace gpst
