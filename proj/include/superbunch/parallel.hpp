#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace superbunch {

/// Number of workers to use; 0 means "all hardware threads".
inline unsigned resolve_workers(unsigned requested) noexcept
{
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs body(chunk) for every chunk in [0, n_chunks) on up to `workers`
/// threads. Chunks are claimed dynamically; any determinism must come from
/// the caller writing results by chunk index.
template <class Body>
void for_each_chunk(std::size_t n_chunks, unsigned workers, Body&& body)
{
    workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n_chunks, 1)));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < n_chunks; c = next++) {
                try {
                    body(c);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

/// Neumaier-compensated accumulator. Combining partials in a fixed order
/// gives results independent of how chunks were scheduled.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    void merge(const CompensatedSum& other) noexcept
    {
        add(other.sum_);
        add(other.comp_);
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Fixed chunk geometry used by every reproducible reduction in the library.
struct ChunkPlan {
    std::size_t total;
    std::size_t chunk_size;

    std::size_t count() const noexcept { return chunk_size == 0 ? 0 : (total + chunk_size - 1) / chunk_size; }
    std::size_t begin(std::size_t c) const noexcept { return c * chunk_size; }
    std::size_t end(std::size_t c) const noexcept { return std::min(total, (c + 1) * chunk_size); }
};

}  // namespace superbunch
