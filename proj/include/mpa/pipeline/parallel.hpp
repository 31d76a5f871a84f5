#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mpa::pipeline {

/// Runs fn(0..count-1) on a bounded pool (workers <= 0 means hardware
/// concurrency; 1 runs inline). fn is expected to record its own per-item
/// failures; an exception that escapes fn is treated as a global failure and
/// rethrown after the pool drains.
inline void run_parallel(size_t count, int workers,
                         const std::function<void(size_t)>& fn) {
  int n = workers;
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (n == 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex failure_mutex;
  std::string failure;
  auto body = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure.empty()) failure = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure.empty()) failure = "unknown worker error";
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t spawn = std::min<size_t>(static_cast<size_t>(n), count);
  for (size_t t = 0; t < spawn; ++t) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (!failure.empty()) {
    throw std::runtime_error("worker failed: " + failure);
  }
}

}  // namespace mpa::pipeline
