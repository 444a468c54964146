#include "bdglab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bdglab {

namespace {

std::atomic<int> g_override{0};
thread_local bool t_inside_worker = false;

int env_workers() {
  const char* raw = std::getenv("BDGLAB_WORKERS");
  if (raw == nullptr) return 1;
  try {
    return std::max(1, std::stoi(raw));
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace

int worker_count() {
  const int o = g_override.load();
  return o > 0 ? o : env_workers();
}

void set_worker_count(int workers) { g_override.store(std::max(0, workers)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      t_inside_worker ? 1 : std::min<std::size_t>(n, static_cast<std::size_t>(worker_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    t_inside_worker = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
    t_inside_worker = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bdglab
