#pragma once

#include <cstddef>
#include <functional>

namespace pt {

/// Worker count used by batch operations (knn scans, crop rebuilding, batch
/// localization). Defaults to 1; the CLI sets it from --threads.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks never
/// overlap, so bodies that write only to their own slots need no locking and
/// produce the same result for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace pt
