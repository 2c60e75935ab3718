// parallel.hpp — chunked parallel execution with a reproducibility contract.
//
// Monte-Carlo loops here must produce bit-identical results whatever the
// worker count.  Two rules achieve that:
//
//   1. work is partitioned into fixed-size chunks whose boundaries depend
//      only on (n, chunk_size), never on the number of threads;
//   2. floating-point reductions happen per chunk and are merged in chunk
//      order (plus pairwise_sum for flat arrays), so the rounding sequence
//      is a pure function of the inputs.
//
// Threads only race for chunk indices; everything they write is disjoint.

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace klist {

namespace detail {
inline std::atomic<std::size_t> max_threads_override{0};
}

/// Worker cap for for_each_chunk.  Defaults to the hardware concurrency.
[[nodiscard]] inline std::size_t max_threads() noexcept {
    const std::size_t v = detail::max_threads_override.load(std::memory_order_relaxed);
    if (v != 0)
        return v;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

/// Override the worker cap (0 restores the hardware default).  Results never
/// depend on this; only wall-clock time does.
inline void set_max_threads(std::size_t n) noexcept {
    detail::max_threads_override.store(n, std::memory_order_relaxed);
}

/// Run fn(chunk_index, begin, end) for every chunk of the fixed grid over
/// [0, n).  Chunks are claimed dynamically but their boundaries are
/// worker-count-independent; fn must only write state owned by its chunk.
/// The first exception thrown by any chunk is rethrown on the caller.
inline void for_each_chunk(std::size_t n, std::size_t chunk_size,
                           const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0)
        return;
    if (chunk_size == 0)
        chunk_size = 1;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(n, begin + chunk_size);
        fn(c, begin, end);
    };

    const std::size_t workers = std::min(max_threads(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            run_chunk(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks)
                return;
            try {
                run_chunk(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

/// Pairwise (cascade) summation: O(log n) rounding depth and a fixed
/// association order, so sums are reproducible and accurate at the 1e5–1e7
/// lengths used by the estimators.
[[nodiscard]] inline double pairwise_sum(std::span<const double> xs) noexcept {
    if (xs.size() <= 16) {
        double acc = 0.0;
        for (const double x : xs)
            acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace klist
