#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mld::detail {

inline unsigned resolve_workers(unsigned requested, std::size_t tasks) {
    unsigned workers = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, tasks)));
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads with a static
/// strided schedule. fn must only write to slot i of its outputs.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    workers = resolve_workers(workers, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mld::detail
