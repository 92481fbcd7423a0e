#ifndef BFSGD_PARALLEL_HPP
#define BFSGD_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

#include "bfsgd/errors.hpp"

namespace bfsgd {

/// Evaluates fn(0..count-1) on up to `threads` workers and returns the results
/// in index order. The first failing index (lowest) has its exception rethrown.
template <typename Fn>
auto parallel_map(Index count, unsigned threads, Fn&& fn) -> std::vector<decltype(fn(Index{}))> {
  using Result = decltype(fn(Index{}));
  std::vector<std::optional<Result>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));

  auto work = [&](Index begin, Index stride) {
    for (Index i = begin; i < count; i += stride) {
      try {
        slots[static_cast<std::size_t>(i)].emplace(fn(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };

  const Index workers = std::max<Index>(1, std::min<Index>(count, static_cast<Index>(threads)));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Result> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

}  // namespace bfsgd

#endif  // BFSGD_PARALLEL_HPP
