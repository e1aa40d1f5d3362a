#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "odma_ura/types.hpp"

namespace odma_ura {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Named sub-stream families. Values are part of the reproducibility contract.
enum class StreamDomain : std::uint64_t {
    PilotRows = 1,
    PilotPattern = 2,
    DataPattern = 3,
    Messages = 4,
    Channel = 5,
    Noise = 6,
    SicMode = 7,
    User = 8,
};

// Derives a 64-bit stream key from a seed and an arbitrary path of labels.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                   std::uint64_t c = 0) noexcept {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ (a + 0x632be59bd9b4e019ULL));
    k = detail::mix64(k ^ (b + 0x8cb92ba72f3d8dd7ULL));
    k = detail::mix64(k ^ (c + 0xd6e8feb86659fd93ULL));
    return k;
}

// Counter-based generator: output i is a bijective hash of (key, i), so any
// stream is reproducible from its key alone and streams never share state.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
    CounterRng(std::uint64_t seed, StreamDomain domain, std::uint64_t index = 0) noexcept
        : key_(stream_key(seed, static_cast<std::uint64_t>(domain), index)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on [0, bound); Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept {
        __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    int bit() noexcept { return static_cast<int>((*this)() >> 63); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance (Box-Muller).
    Complex complex_normal(double variance = 1.0) noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-variance * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    // Ascending sample of `count` distinct values from [0, population).
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t population,
                                                          std::uint32_t count) {
        require(count <= population, "sample larger than population");
        std::vector<std::uint32_t> pool(population);
        for (std::uint32_t i = 0; i < population; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::uint32_t>(below(population - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace odma_ura
