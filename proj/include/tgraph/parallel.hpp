#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tgraph {

// Worker cap from TGRAPH_THREADS; unset or invalid means single-threaded.
inline std::size_t thread_count() {
  const char* env = std::getenv("TGRAPH_THREADS");
  if (env == nullptr) return 1;
  const long n = std::strtol(env, nullptr, 10);
  if (n < 1) return 1;
  return static_cast<std::size_t>(n);
}

// Runs fn(i) for i in [0, n). Callers must make fn(i) write only to slot i of
// preallocated storage; reductions happen afterwards in index order, so the
// result is identical to the sequential run for any thread count. If any
// fn(i) throws, the exception from the smallest failing index is rethrown,
// matching what the sequential run would surface.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failure_index = n;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (i < failure_index) {
            failure_index = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tgraph
