// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace isirx {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are keyed
/// by index, so any later reduction in index order is independent of the
/// worker count.
template <class Result>
std::vector<Result> parallel_map(int n, int threads, const std::function<Result(int)>& fn) {
    std::vector<Result> results(static_cast<std::size_t>(n));
    if (n == 0) return results;
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = fn(i);
        return results;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                results[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

inline int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace isirx
