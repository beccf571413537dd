#pragma once

#include <cstddef>
#include <functional>

namespace contpol {

/// Worker count used by parallel_for. 0 selects std::thread::hardware_concurrency().
void set_thread_count(std::size_t n) noexcept;
std::size_t thread_count() noexcept;

/// Runs body(i) for i in [0, n). Calls made from inside a worker run serially.
/// Callers write results into per-index slots, so output never depends on
/// the worker count. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace contpol
