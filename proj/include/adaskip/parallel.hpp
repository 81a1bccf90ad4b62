#pragma once

#include <cstddef>
#include <functional>

namespace adaskip {

/// Worker count: ADASKIP_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_budget();

/// Calls fn(i) for i in [0, n) on up to thread_budget() threads. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace adaskip
