#pragma once

// Minimal worker-pool helper: runs fn(i) for i in [0, n) on a fixed number of
// threads with a strided, deterministic work split. Results must go into
// preallocated per-index slots so the outcome is independent of scheduling.

#include <cstdlib>
#include <thread>
#include <vector>

namespace parapde {

inline int default_threads() {
    if (const char* env = std::getenv("PARAPDE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    int nt = std::min(threads, n);
    pool.reserve(std::size_t(nt));
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([t, n, nt, &fn] {
            for (int i = t; i < n; i += nt) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace parapde
