#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace swc {

// Static-chunked parallel loop. Each index is processed exactly once and the
// caller writes results into per-index slots, so the outcome is identical for
// any thread count.
inline void parallel_for(std::int64_t count, int threads,
                         const std::function<void(std::int64_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  int workers = static_cast<int>(
      std::min<std::int64_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::int64_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace swc
