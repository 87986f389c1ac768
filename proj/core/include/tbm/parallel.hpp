#pragma once

#include <cstddef>
#include <functional>

namespace tbm {

/// Worker cap: TBM_THREADS environment variable; 0 or unset means one
/// worker per hardware thread.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) across workers. Each index is processed
/// exactly once; callers must make fn(i) independent of scheduling (write
/// to slot i only) so results are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tbm
