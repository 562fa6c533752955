#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace permboot {

[[nodiscard]] inline std::size_t default_threads() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Tasks are
// claimed dynamically; results must be written to per-index slots. The
// exception of the lowest failing index is rethrown.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
    threads = std::clamp<std::size_t>(threads == 0 ? default_threads() : threads, 1,
                                      std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> errors(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            for (std::size_t w = 0; w < threads; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < count && !failed; i = next++) {
                        try {
                            fn(i);
                        } catch (...) {
                            errors[i] = std::current_exception();
                            failed = true;
                        }
                    }
                });
            }
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace permboot
