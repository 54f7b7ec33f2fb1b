#include "mixrate/common.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace mixrate {

namespace {

double pairwise_range(std::span<const double> v, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_range(v, lo, mid) + pairwise_range(v, mid, hi);
}

double pairwise_fn_range(std::size_t lo, std::size_t hi,
                         const std::function<double(std::size_t)>& f) {
  const std::size_t n = hi - lo;
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_fn_range(lo, mid, f) + pairwise_fn_range(mid, hi, f);
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_range(v, 0, v.size());
}

double pairwise_sum_fn(std::size_t n, const std::function<double(std::size_t)>& f) {
  if (n == 0) return 0.0;
  return pairwise_fn_range(0, n, f);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  threads = clamp_threads(threads);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex guard;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        // Static striding: slot i belongs to worker i % workers.
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mixrate
