#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace odeco {

// Worker count: ODECO_THREADS caps the pool, hardware concurrency otherwise.
inline int default_thread_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("ODECO_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

// Index-parallel loop over [0, n). Each task owns its slot of the caller's
// result vector, so execution order cannot affect the outcome. Exceptions in
// tasks are swallowed per index; tasks that must report failure should write
// it into their slot.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = -1) {
    const int workers = threads >= 1 ? threads : default_thread_count();
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                }
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace odeco
