#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stm/types.hpp"

namespace stm {

/// Resolves a worker count: a positive request wins, then the STMKIT_THREADS
/// environment variable, then hardware concurrency.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the assignment of indices to workers is
/// unspecified. Exceptions from workers are rethrown on the caller.
void parallel_for(Index count, int threads,
                  const std::function<void(Index)>& body);

/// Combines items with a fixed binary tree: (x0+x1)+(x2+x3)... independent of
/// how the items were produced, so reductions are reproducible across thread
/// counts.
template <typename T, typename Combine>
T tree_reduce(std::vector<T> items, Combine combine) {
  if (items.empty()) throw ValidationError("tree_reduce: no items");
  while (items.size() > 1) {
    std::vector<T> next;
    next.reserve((items.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < items.size(); i += 2)
      next.push_back(combine(std::move(items[i]), std::move(items[i + 1])));
    if (items.size() % 2 == 1) next.push_back(std::move(items.back()));
    items = std::move(next);
  }
  return std::move(items.front());
}

}  // namespace stm
