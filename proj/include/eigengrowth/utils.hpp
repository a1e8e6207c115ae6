#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace eigengrowth::utils {

// Deterministic parallel map: tasks write to preallocated slots by index,
// so the merged result does not depend on the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         unsigned threads = 0) {
    if (threads == 0) {
        threads = std::thread::hardware_concurrency();
        if (threads == 0) threads = 4;
        threads = std::min(threads, 8u);
    }
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    for (auto& th : pool) th.join();
}

// FNV-1a, used for config hashes and table fingerprints
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// shortest-round-trip-ish decimal formatting for CSV output
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        // try shorter representations
        for (int prec = 1; prec <= 16; ++prec) {
            char b2[40];
            std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
            if (std::strtod(b2, nullptr) == v) return b2;
        }
    }
    return buf;
}

}  // namespace eigengrowth::utils
