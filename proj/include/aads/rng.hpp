#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace aads::rng {

/// splitmix64 finaliser.
constexpr std::uint64_t mix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple; draws depend only on the key, never on call order.
inline std::uint64_t hash(std::initializer_list<std::uint64_t> key)
{
    std::uint64_t h = 0x243F6A8885A308D3ull;
    for (std::uint64_t k : key)
        h = mix(h ^ mix(k));
    return h;
}

/// Uniform in [0,1) with 53 random bits.
inline double to_unit(std::uint64_t h)
{
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double uniform(std::initializer_list<std::uint64_t> key)
{
    return to_unit(hash(key));
}

/// Standard normal by Box-Muller from two hashed uniforms derived from `h`.
inline double normal_from(std::uint64_t h)
{
    const double u1 = 1.0 - to_unit(mix(h ^ 0x1ull)); // (0,1]
    const double u2 = to_unit(mix(h ^ 0x2ull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double normal(std::initializer_list<std::uint64_t> key)
{
    return normal_from(hash(key));
}

} // namespace aads::rng
