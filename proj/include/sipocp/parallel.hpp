#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sipocp {

/// Worker count from SIPOCP_THREADS (default 1).
inline int default_thread_count()
{
  if (const char * env = std::getenv("SIPOCP_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception &) {
      return 1;
    }
  }
  return 1;
}

/// Run fn(i) for i in [0, n) on up to `threads` workers; rethrows the first exception.
template<typename Fn>
void parallel_for(int n, int threads, Fn && fn)
{
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) { fn(i); }
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += threads) { fn(i); }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto & t : pool) { t.join(); }
  for (auto & e : errors) {
    if (e) { std::rethrow_exception(e); }
  }
}

}  // namespace sipocp
