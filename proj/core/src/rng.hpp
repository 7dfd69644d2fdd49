#pragma once

// Seeded, platform-stable randomness. std::shuffle and the std distributions other than
// normal_distribution on mt19937_64 are avoided where cross-run byte equality matters.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gsstyle::detail {

    inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept { return splitmix64(a ^ splitmix64(b)); }

    inline std::uint64_t fnv1a(std::string_view s) noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    inline std::vector<double> normal_vector(std::uint64_t seed, std::size_t n, double stddev) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(0.0, stddev);
        std::vector<double> v(n);
        for (double& x : v) {
            x = dist(rng);
        }
        return v;
    }

    /// Fisher-Yates with a splitmix stream; modulo bias is irrelevant at ring sizes.
    template <class T>
    void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
        std::uint64_t state = seed;
        for (std::size_t k = items.size(); k > 1; --k) {
            state = splitmix64(state);
            const std::size_t j = static_cast<std::size_t>(state % k);
            std::swap(items[k - 1], items[j]);
        }
    }

} // namespace gsstyle::detail
