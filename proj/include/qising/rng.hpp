#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>

namespace qising {

// Counter-based 64-bit generator: a SplitMix64-style finalizer applied to a
// keyed Weyl counter.  State is (key, counter); the key is derived from
// (seed, stream), so chains with distinct stream indices draw from
// non-overlapping sequences and the whole stream is reproducible across
// platforms (no libstdc++ distribution quirks).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(fmix(seed ^ fmix(stream + 0x9e3779b97f4a7c15ull))) {}

    std::uint64_t next_u64() { return fmix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // strictly positive exponential variate with the given rate
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // unbiased integer in [0, n), n >= 1
    std::uint64_t uniform_index(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t limit = (~0ull / n) * n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    int pm_one() { return (next_u64() >> 63) ? +1 : -1; }

private:
    static std::uint64_t fmix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace qising
