#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mfeo {

// Worker cap: MFEO_THREADS env var; 0 or unset means hardware concurrency.
inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("MFEO_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) n = static_cast<unsigned>(v);
    }
    return n;
}

// Runs fn(i) for i in [0, n). fn must write only to its own output slot;
// results are therefore identical regardless of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = worker_count();
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / used;
            const std::size_t hi = n * (w + 1) / used;
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mfeo
