#pragma once

#include <cstddef>
#include <functional>

namespace superres {

/// Worker count used when a caller passes 0 (hardware concurrency, at least 1).
std::size_t default_thread_count() noexcept;

/// Splits [0, count) into contiguous chunks and runs `body(begin, end)` on
/// up to `threads` workers (0 = default). Chunk boundaries depend only on
/// `count` and the worker count, and callers write results to per-index
/// slots, so output never depends on scheduling. The first exception thrown
/// by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace superres
