#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace pcsc {

// Runs fn(i) for i in [0, count). Each task owns its output slot, so results
// are identical for any thread count; callers reduce in index order.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<std::size_t>(threads, count);
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace pcsc
