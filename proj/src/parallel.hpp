#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace klf {

/// Worker cap: KLFIELD_THREADS if set and positive, else hardware count.
inline unsigned max_threads() {
  if (const char *env = std::getenv("KLFIELD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1)
      return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Run body(begin, end) over disjoint blocks of [0, count). Each index is
/// handled by exactly one worker, so any computation whose output element i
/// depends only on index i gives results independent of the thread count.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)> &body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(max_threads(), count));
  if (workers <= 1 || count < 2) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end)
      break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto &th : pool)
    th.join();
}

} // namespace klf
