#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ml2bf {

/// Runs fn(i) for i in [0, count) on up to `threads` workers and returns the
/// results indexed by i, so any reduction over them is independent of the
/// worker count. The first exception thrown by a worker is rethrown.
template <typename Fn>
auto run_replicates(int count, int threads, Fn &&fn) -> std::vector<decltype(fn(0))> {
  using Result = decltype(fn(0));
  std::vector<Result> out(static_cast<std::size_t>(std::max(count, 0)));
  threads = std::clamp(threads, 1, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            out[static_cast<std::size_t>(i)] = fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Running mean and standard error, accumulated in replicate order.
struct MeanSe {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return count > 0 ? sum / count : 0.0; }
  double se() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - count * m * m) / (count - 1.0);
    return std::sqrt(std::max(0.0, var) / count);
  }
};

}  // namespace ml2bf
