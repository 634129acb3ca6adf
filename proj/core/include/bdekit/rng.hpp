#ifndef BDEKIT_RNG_HPP
#define BDEKIT_RNG_HPP

#include <cstdint>
#include <random>

namespace bdekit {

/// splitmix64 finalizer, used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Seeded generator all bdekit randomness funnels through.
/// Integer and real draws avoid std::*_distribution so the sequence is a
/// function of the seed alone, not of the standard library version.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi], both ends inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        // rejection sampling keeps the draw exactly uniform
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return lo + static_cast<int64_t>(x % span);
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform real in [lo, hi).
    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

private:
    std::mt19937_64 engine_;
};

} // namespace bdekit

#endif
