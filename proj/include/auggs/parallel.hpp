#pragma once

#include <cstddef>
#include <functional>

namespace auggs {

/// Worker count: explicit override if set, else AUGGS_THREADS (0 = auto), else hardware.
std::size_t worker_count();

/// Overrides AUGGS_THREADS for the current process. 0 restores the environment default.
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n). Work items are independent; callers that reduce
/// must do so afterwards in index order so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace auggs
