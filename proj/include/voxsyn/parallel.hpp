#pragma once

// Deterministic data parallelism: contiguous index chunks, disjoint writes.
// Only pure per-element maps use this, so results are identical for any
// thread count.  The cap comes from set_max_threads / VOXSYN_THREADS /
// hardware concurrency, in that order.

#include <cstddef>
#include <thread>
#include <vector>

namespace voxsyn {

int max_threads();
void set_max_threads(int n);

template <class F>
void parallel_for(size_t n, F&& fn) {
    const int nt = std::min<size_t>(max_threads(), n);
    if (nt <= 1) {
        fn(size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const size_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const size_t b = t * chunk;
        const size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace voxsyn
