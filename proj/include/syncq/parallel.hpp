#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace syncq {

/// Number of worker threads to use when the caller passes 0.
inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(chunk, begin, end) over [0, total) split into fixed-size chunks.
///
/// Chunk boundaries depend only on `total` and `chunk_size`, never on the
/// thread count, so callers that derive one random substream per chunk get
/// identical results for any `threads`.
template <typename Fn>
void for_each_chunk(std::size_t total, std::size_t chunk_size, unsigned threads, Fn&& fn) {
    if (total == 0) return;
    const std::size_t chunks = (total + chunk_size - 1) / chunk_size;
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        fn(c, begin, std::min(total, begin + chunk_size));
    };
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }

    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            std::size_t c;
            {
                std::lock_guard lock(mu);
                if (next >= chunks || error) return;
                c = next++;
            }
            try {
                run_chunk(c);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace syncq
