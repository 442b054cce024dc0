#include "branchlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace branchlab {

namespace {

std::atomic<int> g_override{0};
thread_local int t_depth = 0;

int env_threads() {
  const char* env = std::getenv("BRANCHLAB_THREADS");
  if (env == nullptr) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

}  // namespace

int thread_count() {
  int o = g_override.load();
  if (o > 0) return o;
  int e = env_threads();
  if (e > 0) return e;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(int threads) { g_override.store(std::max(0, threads)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  int workers = static_cast<int>(std::min<std::size_t>(thread_count(), count));
  // Nested calls run inline; the outer level already owns the workers.
  if (workers <= 1 || t_depth > 0) {
    ++t_depth;
    try {
      for (std::size_t i = 0; i < count; ++i) body(i);
    } catch (...) {
      --t_depth;
      throw;
    }
    --t_depth;
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    ++t_depth;
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    --t_depth;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double parallel_sum(std::size_t count, const std::function<double(std::size_t)>& f) {
  std::vector<double> partial(count, 0.0);
  parallel_for(count, [&](std::size_t i) { partial[i] = f(i); });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace branchlab
