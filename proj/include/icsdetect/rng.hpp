#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace icsdetect {

/// Seed for every stochastic stage. Equal seeds give equal streams.
struct RngSeed {
    std::uint64_t value = 0;

    friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// SplitMix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the sub-stream `index` of `parent` (e.g. one stream per tree).
constexpr RngSeed derive_seed(RngSeed parent, std::uint64_t index) noexcept {
    return RngSeed{mix64(mix64(parent.value) ^ mix64(index + 0x632be59bd9b4e019ULL))};
}

/// Deterministic generator: the standard 64-bit Mersenne Twister, whose
/// output sequence is fixed by the C++ standard, plus portable transforms.
/// The std:: distributions are avoided on purpose since their output is
/// implementation-defined.
class Rng {
public:
    explicit Rng(RngSeed seed) : engine_(mix64(seed.value)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound), bias-free by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) {
            return 0;
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % bound;
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Exponential with the given rate.
    double exponential(double rate) {
        double u = uniform();
        while (u <= 0.0) {
            u = uniform();
        }
        return -std::log(u) / rate;
    }

    /// Fisher-Yates shuffle of a random-access range.
    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                           first + static_cast<std::ptrdiff_t>(j));
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace icsdetect
