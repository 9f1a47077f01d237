#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ffc {

// Static block partition of [0, n) across worker threads. Job i may only
// write state it owns (its own output slot), which keeps results identical
// for any thread count.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t t_count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> workers;
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (std::size_t t = 0; t < t_count; ++t) {
    workers.emplace_back([&, t] {
      const std::size_t lo = n * t / t_count;
      const std::size_t hi = n * (t + 1) / t_count;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ffc
