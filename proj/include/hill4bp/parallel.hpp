#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hill4bp {

/// Thread count: explicit request, else HILL4BP_THREADS, else hardware concurrency.
inline unsigned resolve_threads(unsigned requested = 0)
{
    if (requested > 0) {
        return requested;
    }
    if (const char *env = std::getenv("HILL4BP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return unsigned(v);
            }
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results written by
/// index keep the output order independent of scheduling. The first exception
/// thrown by any job is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn)
{
    threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), unsigned(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto &th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Maps fn over [0, n) in parallel; out[i] = fn(i).
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn &&fn)
{
    std::vector<T> out(n);
    parallel_for(n, threads, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

} // namespace hill4bp
