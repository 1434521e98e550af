#pragma once

#include <cstddef>
#include <functional>

namespace pagar {

// worker count: PAGAR_LAB_THREADS if set, else the hardware concurrency
int thread_count();

// runs body(i) for i in [0, n); each index is handled exactly once, so bodies
// that only write slot i give results independent of the thread count
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pagar
