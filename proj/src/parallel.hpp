#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isophase::detail {

// Calls body(worker, i) for i in [0, n) on up to `threads` workers. The first exception
// stops further work and is rethrown after all workers join.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&](int w) {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(w, i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

// worker count from ISOPHASE_THREADS when set, else `fallback` (0 = hardware concurrency)
int thread_count(int fallback);

}  // namespace isophase::detail
