#pragma once

// Platform-stable hashing and random streams. The standard <random>
// distributions are implementation-defined, so everything that has to be
// reproducible across toolchains (mock embeddings, sampling, t-SNE init)
// draws from these instead.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <string_view>

namespace promptaid {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::span<const double> values,
                             std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (double v : values) {
        unsigned char buf[sizeof(double)];
        std::memcpy(buf, &v, sizeof(double));
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(buf), sizeof(double)), h);
    }
    return h;
}

/// SplitMix64 (Steele, Lea, Flood). Each call advances the state by the
/// golden-gamma constant and returns the mixed value.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    constexpr std::uint64_t operator()() noexcept { return next(); }
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1).
    double uniform_signed() noexcept { return uniform01() * 2.0 - 1.0; }

    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t r;
        do { r = next(); } while (r >= limit);
        return r % bound;
    }

    /// Standard normal via Box-Muller (one draw per call, second discarded).
    double gaussian() noexcept {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent stream for a sub-task, derived from the current seed.
    SplitMix64 fork(std::uint64_t salt) const noexcept {
        SplitMix64 s(state_ ^ (salt * 0xd1b54a32d192ed03ULL));
        s.next();
        return s;
    }

private:
    std::uint64_t state_;
};

} // namespace promptaid
