#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace gftperc {

// Deterministic parallel loop: `fn(i)` must write only to slot i (or thread
// locals merged commutatively). Draws are keyed by index, never by thread,
// so any schedule yields identical results.
inline void parallel_for(std::int64_t n, int num_threads,
                         const std::function<void(std::int64_t)>& fn) {
    if (num_threads <= 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    const std::int64_t grain = std::max<std::int64_t>(1, n / (num_threads * 64));
    auto worker = [&] {
        while (true) {
            const std::int64_t begin = next.fetch_add(grain);
            if (begin >= n) break;
            const std::int64_t end = std::min(n, begin + grain);
            for (std::int64_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(num_threads - 1);
    for (int t = 1; t < num_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace gftperc
