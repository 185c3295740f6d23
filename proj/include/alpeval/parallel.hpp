#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace alpeval {

/// Runs fn(0) .. fn(n-1) across up to `jobs` threads. Each index is claimed
/// exactly once; determinism is the caller's job (write only to slot i).
template <typename Fn>
inline void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (n == 0) return;
    if (jobs <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min(jobs, n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace alpeval
