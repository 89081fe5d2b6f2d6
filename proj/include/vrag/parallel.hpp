#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vrag {

/// Run fn(i) for i in [0, n) on up to `parallelism` threads. Results must be
/// written to index-addressed slots by the caller so output order never
/// depends on scheduling. The first exception is rethrown after all workers
/// finish; fn is responsible for catching anything it wants to tolerate.
template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = parallelism < 1 ? 1 : static_cast<std::size_t>(parallelism);
    if (workers > n) workers = n;
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace vrag
