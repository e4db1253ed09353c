#ifndef BRW_PARALLEL_HPP
#define BRW_PARALLEL_HPP

// Work-stealing loop over independent replicas. Results must be written to
// preallocated slots indexed by the rep number so output is bit-identical at
// any thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace brw {
namespace detail {

template <class Fn>
inline void parallel_reps(std::size_t reps, unsigned threads, Fn&& fn) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < reps; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= reps) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  unsigned n = std::min<unsigned>(threads, std::thread::hardware_concurrency() > 0
                                               ? 4 * std::thread::hardware_concurrency()
                                               : threads);
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace detail
}  // namespace brw

#endif  // BRW_PARALLEL_HPP
