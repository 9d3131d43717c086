#pragma once

// Deterministic parallel map over an index range: results land in slot order
// regardless of scheduling, so output files do not depend on thread count.

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace sfent {

inline int effective_threads(int requested) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (requested <= 0) return std::max(hw, 1);
  return std::max(1, std::min(requested, std::max(hw, 1) * 4));
}

template <typename F>
void parallel_for(std::size_t count, int threads, const F& body) {
  threads = std::min<std::size_t>(std::max(threads, 1), count ? count : 1);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
  };
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace sfent
