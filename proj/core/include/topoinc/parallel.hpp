#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace topoinc {

// Process-wide default worker count for parallel maps (CLI --workers).
// 0 means std::thread::hardware_concurrency().
void set_default_workers(std::size_t n);
std::size_t default_workers();

// Calls fn(i) for i in [0, n) over contiguous chunks on up to `workers`
// threads. fn must be safe to call concurrently for distinct i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = 0);

// Index-ordered parallel map.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, std::size_t workers = 0) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); }, workers);
  return out;
}

}  // namespace topoinc
