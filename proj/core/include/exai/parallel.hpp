// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace exai {

/// Hardware concurrency, at least 1.
inline unsigned max_threads() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(i) for i in [0, n) on up to `threads` workers using a static
/// block partition. Callers must only write state owned by index i.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t wkr = 0; wkr < workers; ++wkr) {
            const std::size_t begin = n * wkr / workers;
            const std::size_t end = n * (wkr + 1) / workers;
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace exai
