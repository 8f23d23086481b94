// Row-parallel map helper. Thread count is capped by JOHN_ELLIPSOID_THREADS;
// results must not depend on the chunking (callers write disjoint ranges).
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace johnell {

inline int thread_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("JOHN_ELLIPSOID_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) hw = std::min<long>(hw, v);
    }
    return hw;
}

// Invokes fn(begin, end) over a partition of [0, total). Serial when one
// thread suffices so small problems pay no spawn cost.
inline void parallel_for_range(long total, const std::function<void(long, long)>& fn) {
    const int nt = thread_count();
    if (total <= 0) return;
    if (nt == 1 || total < 2048) {
        fn(0, total);
        return;
    }
    const int workers = static_cast<int>(std::min<long>(nt, total));
    const long chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        const long b = t * chunk;
        const long e = std::min(total, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace johnell
