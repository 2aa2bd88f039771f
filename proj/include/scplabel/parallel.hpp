#pragma once

#include <cstddef>
#include <functional>

namespace scplabel {

/// Caps the number of worker threads used by per-row kernels. 0 restores the
/// default (1). Results never depend on this value.
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Calls body(begin, end) on contiguous, disjoint slices covering [0, n).
/// Each index is visited exactly once; the body must only write state owned
/// by the indices it is given.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace scplabel
