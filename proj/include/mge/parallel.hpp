#pragma once

#include <cstddef>
#include <functional>

namespace mge {

/// Process-wide worker count used by the pool builder, population evaluation
/// and transfer experiments. Defaults to 1. Results never depend on it.
void set_worker_count(std::size_t n);
std::size_t worker_count();

/// Calls fn(i) for every i in [0, n) on up to worker_count() threads. Each
/// index is visited exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace mge
