#pragma once

#include <cstdint>
#include <limits>

namespace conic {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key of the index-th child of a seed. Children of distinct (seed, index)
/// pairs are decorrelated; the mapping is fixed so results replay exactly.
constexpr std::uint64_t child_key(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(mix64(seed) ^ mix64(index ^ 0x5851f42d4c957f2dULL));
}

/// xoshiro256** generator seeded from a 64-bit key through SplitMix64.
///
/// Satisfies UniformRandomBitGenerator. Normal and uniform draws are
/// implemented here (not with <random> distributions) so that streams are
/// identical across standard library implementations.
class StreamRng
{
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t key) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform integer in [0, n), n > 0, without modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept;
    /// Standard normal (Box-Muller, pairs cached).
    double normal() noexcept;
    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Generator for the index-th child stream of `seed`.
inline StreamRng child_stream(std::uint64_t seed, std::uint64_t index) noexcept
{
    return StreamRng(child_key(seed, index));
}

}  // namespace conic
