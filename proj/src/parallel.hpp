#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace lidomaug::detail {

/// Splits [0, n) into `workers` contiguous chunks and runs
/// fn(begin, end, worker) on each; worker 0 runs on the calling thread.
template <typename Fn>
void parallel_chunks(unsigned workers, std::size_t n, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < workers) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
  }
  fn(std::size_t{0}, std::min(n, chunk), 0u);
}

}  // namespace lidomaug::detail
