#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lrukit {

/// Global worker cap. Resolution order: set_num_threads(), LRU_THREADS, hardware concurrency.
std::size_t num_threads();
void set_num_threads(std::size_t n);  // 0 resets to the environment default

/// Runs body(begin, end) over contiguous blocks of [0, n). Blocks are assigned
/// deterministically, so reductions done per block and summed in block order are
/// reproducible for a fixed thread count.
template <class Body>
void parallel_blocks(std::size_t n, std::size_t threads, Body&& body) {
    if (n == 0) return;
    if (threads == 0) threads = 1;
    if (threads > n) threads = n;
    if (threads == 1) {
        body(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = n * t / threads;
            const std::size_t end = n * (t + 1) / threads;
            workers.emplace_back([&, begin, end, t] {
                try {
                    body(begin, end, t);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    parallel_blocks(n, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) body(i);
    });
}

}  // namespace lrukit
