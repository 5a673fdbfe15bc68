#include "stm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace stm {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STMKIT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
      // fall through to hardware concurrency
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(Index count, int threads,
                  const std::function<void(Index)>& body) {
  if (count <= 0) return;
  const int workers =
      static_cast<int>(std::min<Index>(count, std::max(1, threads)));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;

  auto work = [&] {
    for (;;) {
      const Index i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stm
