#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fkmc {

/// Runs fn(chunk_index, begin, end) over [0, count) split into fixed-size
/// chunks pulled by a worker pool. Chunk boundaries depend only on
/// (count, chunk_size), so per-chunk results reduced in chunk order are
/// bitwise deterministic for any worker count. The first exception thrown
/// by any worker is rethrown after the pool drains.
template <class Fn>
void parallel_chunks(std::size_t count, int workers, std::size_t chunk_size, Fn&& fn) {
    if (count == 0) return;
    const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
    if (workers <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                        n_chunks);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fkmc
