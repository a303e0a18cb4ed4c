#ifndef MOLCOMM_RANDOM_HPP
#define MOLCOMM_RANDOM_HPP

// Reproducible random streams. Every consumer derives its own engine from
// (master seed, stream tag, index) so results never depend on execution order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace molcomm {

using Engine = boost::random::mt19937_64;

enum class StreamTag : std::uint64_t {
    simulation = 0x51u,
    noise = 0x52u,
    bits = 0x53u,
    ensemble = 0x54u,
    test = 0x55u,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_seed(std::uint64_t master, StreamTag tag,
                                           std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(tag)) + index);
}

inline Engine make_engine(std::uint64_t master, StreamTag tag, std::uint64_t index) {
    return Engine(stream_seed(master, tag, index));
}

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown by any body is rethrown.
template <class Body>
void parallel_for(std::int64_t n, Body&& body, unsigned threads = 0) {
    if (n <= 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, n));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace molcomm

#endif  // MOLCOMM_RANDOM_HPP
