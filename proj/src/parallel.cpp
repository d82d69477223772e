#include "lrukit/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace lrukit {

namespace {

std::atomic<std::size_t> g_threads{0};

std::size_t env_default() {
    if (const char* env = std::getenv("LRU_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace

std::size_t num_threads() {
    const std::size_t n = g_threads.load();
    return n == 0 ? env_default() : n;
}

void set_num_threads(std::size_t n) { g_threads.store(n); }

}  // namespace lrukit
