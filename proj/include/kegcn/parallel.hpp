#pragma once

#include <cstddef>
#include <functional>

namespace kegcn {

/// Worker cap: KEGCN_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous index ranges,
/// so every index is handled by exactly one thread and results written to
/// disjoint locations are identical to a serial run. Falls back to a serial
/// loop when `cost` (a rough flop estimate) is small.
void parallel_for(std::size_t n, std::size_t cost, const std::function<void(std::size_t)>& body);

} // namespace kegcn
