#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hiersample {

/// Executes body(k) for k in [0, n). Library operations accept one of these and
/// never start threads themselves; results must be written to per-index slots so
/// the outcome does not depend on scheduling.
using ParallelFor = std::function<void(std::size_t n, const std::function<void(std::size_t)>& body)>;

inline void run_serial(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t k = 0; k < n; ++k) body(k);
}

inline ParallelFor serial_executor() { return run_serial; }

/// Fixed-size fork-join executor owned by the CLI.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads) : threads_(std::max<std::size_t>(1, threads)) {}

  std::size_t threads() const noexcept { return threads_; }

  void operator()(std::size_t n, const std::function<void(std::size_t)>& body) const {
    if (threads_ == 1 || n < 2) {
      run_serial(n, body);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t k; (k = next.fetch_add(1)) < n;) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    };
    std::vector<std::jthread> crew;
    const std::size_t spawn = std::min(threads_, n) - 1;
    crew.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) crew.emplace_back(worker);
    worker();
    crew.clear();
    if (failure) std::rethrow_exception(failure);
  }

  ParallelFor executor() const {
    return [pool = *this](std::size_t n, const std::function<void(std::size_t)>& body) { pool(n, body); };
  }

 private:
  std::size_t threads_;
};

}  // namespace hiersample
