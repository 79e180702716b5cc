#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace stochwave {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned h = std::thread::hardware_concurrency();
    return h ? static_cast<int>(h) : 1;
}

// Runs fn(i) for i in [0, n) on a worker pool; results come back in index
// order, so the reduction that follows does not depend on scheduling.  The
// first exception by index is rethrown after all workers join.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int workers, Fn&& fn) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> err(n);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                out[i] = fn(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const int w = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(n)));
    if (w == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < w; ++k) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    (void)parallel_map<char>(n, workers, [&](std::size_t i) {
        fn(i);
        return char{0};
    });
}

} // namespace stochwave
