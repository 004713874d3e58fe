#pragma once

#include <cstddef>
#include <functional>

namespace wide {

void set_threads(int n);
int threads();

// Runs f(i) for i in [0, n). Work is split into contiguous blocks; callers
// write to disjoint slots so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace wide
