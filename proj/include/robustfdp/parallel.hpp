#pragma once

#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace robustfdp {

/// Runs body(0) .. body(count - 1) across up to `threads` workers with a
/// strided assignment. The body must not throw; callers record failures in
/// per-index slots, which keeps results independent of scheduling.
inline void parallel_for_index(int count, int threads,
                               const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (threads < 1) throw std::invalid_argument("parallel_for_index: threads < 1");
  const int workers = std::min(threads, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &body] {
      for (int i = w; i < count; i += workers) body(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace robustfdp
