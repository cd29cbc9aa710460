#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace superbunch {

/// SplitMix64. Used both as a seed mixer and as a cheap per-realization
/// generator; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Counter-based seed derivation: the child seed depends only on
/// (seed, stream, index), never on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept
{
    SplitMix64 a(seed ^ (stream * 0xd1b54a32d192ed03ULL));
    std::uint64_t s = a();
    SplitMix64 b(s ^ (index * 0x8cb92ba72f3d8dd7ULL));
    b();
    return b();
}

// Distribution helpers. std:: distributions are implementation-defined, so
// outputs would not be bit-stable across standard libraries.

template <class Engine>
double uniform01(Engine& eng)
{
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <class Engine>
double uniform(Engine& eng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(eng);
}

/// Unit-mean exponential variate.
template <class Engine>
double exponential(Engine& eng)
{
    return -std::log1p(-uniform01(eng));
}

/// Long-stream engine seeded from a derived seed.
using StreamEngine = std::mt19937_64;

inline StreamEngine make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
{
    return StreamEngine(derive_seed(seed, stream, index));
}

}  // namespace superbunch
