#pragma once

#include <cstddef>
#include <functional>

namespace foa {

/// Process-wide worker count used when callers pass threads <= 0.
void set_default_threads(int n);
int default_threads();

/// Runs fn(i) for i in [0, n). Indices are split into contiguous blocks, one
/// per worker; with one worker everything runs on the calling thread in order.
/// The first exception thrown by any worker is rethrown after all join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace foa
