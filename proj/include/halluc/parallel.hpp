#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace halluc {

inline std::size_t default_workers() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Applies fn(i) for i in [0, n) on up to `workers` threads and returns the
/// results in index order. If any call throws, the exception from the lowest
/// failing index is rethrown, so failures do not depend on scheduling.
template <typename Fn>
auto ordered_map(std::size_t n, std::size_t workers, Fn&& fn) {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> results(n);
    std::vector<std::exception_ptr> errors(n);
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));

    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace halluc
