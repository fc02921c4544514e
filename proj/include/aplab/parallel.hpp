#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aplab {

/// Runs body(i) for i in [0, n) on up to `workers` threads. Results must be written by index,
/// so output is independent of scheduling. The first exception is rethrown.
template <class F> void parallel_for(int n, int workers, F &&body) {
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err)
                        err = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

/// Hardware concurrency, at least one.
inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

} // namespace aplab
