#pragma once

// Bounded worker pool over an index range. Results land in index order, so the
// output never depends on the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "cfusion/error.hpp"

namespace cfusion {

/// out[i] = fn(i) for i in [0, n), on up to `threads` workers. When calls throw,
/// the exception of the lowest failing index is rethrown after all workers stop.
template <typename Fn>
auto ParallelMap(std::size_t n, std::size_t threads, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  if (threads == 0) throw Error(ErrorCode::kInvalidArgument, "thread count must be at least 1");
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min(threads, std::max<std::size_t>(n, 1));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace cfusion
