#pragma once

#include <cstddef>
#include <functional>

namespace pf {

/// Worker count: hardware concurrency capped by the PF_THREADS environment variable.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n) over contiguous index chunks. Callers must write to
/// disjoint outputs per index; any reduction happens afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pf
