#include "wide/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wide {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr first;
  std::mutex mu;
  const std::size_t block = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = t * block, hi = std::min(n, lo + block);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace wide
