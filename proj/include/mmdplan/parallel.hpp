#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mmdplan {

/// Worker count used by parallel_for; 0 means hardware concurrency.
inline std::size_t& parallel_workers() {
  static std::size_t n = 0;
  return n;
}

/// Runs fn(i) for i in [0, n) over static contiguous chunks. Results must be
/// written to per-index slots so the outcome does not depend on worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::size_t workers = parallel_workers();
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace mmdplan
