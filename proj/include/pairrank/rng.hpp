#pragma once

#include <cstdint>
#include <random>

namespace pairrank {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded generator wrapping std::mt19937_64. Uniform variates are derived
/// from the raw 64-bit output directly (not through std distributions) so a
/// given seed produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// uniform on [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// uniform index in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Child stream derivation rule: child seed = splitmix64(seed ^ splitmix64(salt)).
    /// Used wherever one top-level seed has to drive several independent streams.
    Rng derive(std::uint64_t salt) const {
        return Rng(splitmix64(seed_ ^ splitmix64(salt)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace pairrank
