#include "parttransfer/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace pt {
namespace {
std::atomic<unsigned> g_threads{1};
// Nested parallel_for calls run inline on the calling worker.
thread_local bool t_in_worker = false;
}

unsigned thread_count() { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(unsigned n) { g_threads.store(std::max(1u, n), std::memory_order_relaxed); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = t_in_worker ? 1 : std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    if (n > 0) body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      t_in_worker = true;
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // First failing chunk in index order wins, independent of scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pt
