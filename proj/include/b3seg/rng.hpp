#pragma once
// Deterministic random streams. mt19937_64 output is fully specified by the
// standard; the distribution helpers below are hand-rolled because
// std::uniform_real_distribution et al. are implementation-defined and would
// break the same-seed reproducibility contract across toolchains.

#include <cstdint>
#include <random>

#include "b3seg/geometry.hpp"

namespace b3seg {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (base seed, purpose tag, counter).
inline uint64_t derive_seed(uint64_t base, uint64_t purpose, uint64_t counter = 0) {
    return splitmix64(splitmix64(base ^ (purpose * 0x9e3779b97f4a7c15ULL)) + counter);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Multiply-shift; slight bias is irrelevant here
    // and the result is deterministic for a fixed stream.
    uint64_t uniform_index(uint64_t n) {
        return uint64_t((__uint128_t(gen_()) * __uint128_t(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Marsaglia polar; spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Area-uniform direction on the unit sphere (normalized 3D normal).
    Vec3 unit_vector() {
        Vec3 v;
        do {
            v = {normal(), normal(), normal()};
        } while (v.norm() < 1e-12);
        return v.normalized();
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace b3seg
