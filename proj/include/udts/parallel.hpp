#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace udts {

// Worker count: UDTS_WORKERS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for every i in [0, n) across worker threads. Results are stored
// by index, so the output order does not depend on scheduling. The first
// exception thrown by any call is rethrown after all workers finish.
template <typename T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn);

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

template <typename T>
std::vector<T> parallel_map(const std::size_t n, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    parallel_for(n, [&](const std::size_t i) { out[i] = fn(i); });
    return out;
}

} // namespace udts
