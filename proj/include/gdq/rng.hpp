#pragma once

#include <cstdint>

namespace gdq {

/// SplitMix64 generator. Fixed algorithm so seeded streams agree across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

/// Independent stream for (seed, index); used to make per-patch sampling order-free.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 mix(seed ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
    mix.next();
    return mix.next();
}

} // namespace gdq
