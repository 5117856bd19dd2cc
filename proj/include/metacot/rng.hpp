#pragma once
// Seeded randomness with fully specified output.
//
// std::uniform_int_distribution and std::shuffle are implementation defined,
// so everything that must be reproducible across standard libraries goes
// through the helpers here instead.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace metacot::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for an independent stream identified by (seed, index).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view key) {
    return derive(seed, fnv1a(key));
}

using Engine = std::mt19937_64;

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t below(Engine& eng, std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
        v = eng();
    } while (v >= limit);
    return v % bound;
}

// Uniform real in [0, 1) with 53 random bits.
inline double unit(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> xs, Engine& eng) {
    for (std::size_t i = xs.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(eng, i));
        using std::swap;
        swap(xs[i - 1], xs[j]);
    }
}

} // namespace metacot::rng
