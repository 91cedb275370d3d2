#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qsurf {

//! Worker count used when callers pass 0: QSURF_THREADS, else hardware concurrency.
unsigned default_threads();
void set_default_threads(unsigned threads);

/// Runs fn(i) for i in [0, count). Each index writes only its own output slot,
/// so results do not depend on the number of workers. The first exception
/// thrown by any worker is rethrown on the calling thread.
template<typename Fn>
void
parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0)
{
  if (threads == 0)
    threads = default_threads();
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  const auto workers = static_cast<unsigned>(
    std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count)
            return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
              failure = std::current_exception();
            next.store(count);
            return;
          }
        }
      });
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace qsurf
