#pragma once

#include <cstddef>
#include <functional>

namespace fbsde {

/// Process-wide worker count used by the space- and path-parallel loops.
/// 0 selects the hardware concurrency. Results never depend on this value.
void set_worker_count(unsigned workers);
[[nodiscard]] unsigned worker_count();

/// Runs body(begin, end) over disjoint chunks covering [0, n). Every index is
/// visited exactly once; bodies must only write to index-owned storage.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace fbsde
