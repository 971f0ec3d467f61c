#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace edgeps {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw k of stream `key` is mix64(key + (k+1) * golden).
/// Every output is a pure function of (key, k), so datasets are reproducible on any
/// platform. Normals use Box-Muller on two uniforms; std distributions are not used
/// because their output is implementation-defined.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    /// Independent stream for item `index` of a run seeded with `seed`.
    static CounterRng stream(std::uint64_t seed, std::uint64_t index) noexcept {
        return CounterRng(mix64(seed ^ mix64(index * kGolden + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next_u64() % n; }

    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace edgeps
