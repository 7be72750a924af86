#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace matweight {

/// Derives independent sub-stream seeds from a base seed and a purpose tag,
/// so call order never influences which stream a consumer sees.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = seed;
    for (std::uint64_t v : {a, b}) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        h ^= h >> 31;
    }
    return h;
}

/// mt19937_64 wrapper producing platform-independent draws.  The standard
/// distributions are implementation-defined, which would break byte-identical
/// replay across toolchains; these mappings are pinned instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Exact uniform integer in [0, bound) via multiply-shift rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        using u128 = unsigned __int128;
        std::uint64_t x = gen_();
        u128 m = static_cast<u128>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = gen_();
                m = static_cast<u128>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform agent id in [1, n].
    int next_agent(int n) {
        return static_cast<int>(next_below(static_cast<std::uint64_t>(n))) + 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace matweight
