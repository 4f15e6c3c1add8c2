#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace spdc {

/// Default worker count: SPDC_THREADS if set and positive, else 1.
inline int default_thread_count()
{
    if (const char* env = std::getenv("SPDC_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return 1;
}

/// Calls body(i) for every i in [0, n) on up to `threads` workers. Indices
/// are handed out dynamically, so body must not depend on call order and
/// must handle its own exceptions.
template <class Body>
void parallel_for(std::size_t n, int threads, Body body)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
}

}  // namespace spdc
