#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace zakai {

/// Pairwise (tree) summation; the result depends only on the order of `xs`.
double pairwise_sum(std::span<const double> xs);

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased; 0 for fewer than two samples
  std::size_t count = 0;
};

SampleMoments sample_moments(std::span<const double> xs);

/// Least-squares slope of y against x. Throws ConfigError for fewer than two points.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Evaluates fn(i) for i in [0, n) on up to `threads` workers and returns the results
/// in index order. The first exception thrown by any task is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int threads, Fn&& fn) {
  std::vector<T> out(n);
  const std::size_t workers = std::min<std::size_t>(n, threads > 1 ? static_cast<std::size_t>(threads) : 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!err) err = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace zakai
