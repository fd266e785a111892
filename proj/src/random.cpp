#include "conic/random.hpp"

#include <cmath>
#include <numbers>

namespace conic {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
{
    return (x << k) | (x >> (64 - k));
}

}  // namespace

StreamRng::StreamRng(std::uint64_t key) noexcept
{
    std::uint64_t z = key;
    for (auto& word : s_)
    {
        word = mix64(z);
        z += 0x9e3779b97f4a7c15ULL;
    }
}

StreamRng::result_type StreamRng::operator()() noexcept
{
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double StreamRng::uniform() noexcept
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t StreamRng::below(std::uint64_t n) noexcept
{
    // Lemire's nearly divisionless method.
    unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n)
    {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold)
        {
            product = static_cast<unsigned __int128>((*this)()) * n;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

double StreamRng::normal() noexcept
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace conic
