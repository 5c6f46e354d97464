#ifndef PLAX_RNG_HPP
#define PLAX_RNG_HPP

#include <cmath>
#include <cstdint>

namespace plax {

/// Small deterministic generator (splitmix64). Used instead of <random>
/// engines/distributions so that seeded outputs are pinned down to the bit,
/// independent of the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal deviate (Box-Muller, no caching so the stream
    /// position depends only on the call count).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Deterministic sub-stream seed for stream index i.
    static std::uint64_t substream(std::uint64_t master, std::uint64_t i) {
        Rng mix(master ^ (0x9e3779b97f4a7c15ull * (i + 1)));
        return mix.next_u64();
    }

private:
    std::uint64_t state_;
};

} // namespace plax

#endif
