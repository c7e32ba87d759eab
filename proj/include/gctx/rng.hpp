#pragma once

#include <cmath>
#include <cstdint>

namespace gctx {

// Counter-based PRNG. Draw k of a stream is a pure function of (seed, k):
// streams are reproducible bit-for-bit across runs and independent of how
// many values other streams have consumed.
//
// Fixed algorithm: the SplitMix64 output mix applied to
//   seed * 0x9E3779B97F4A7C15 + (k + 1) * 0xBF58476D1CE4E5B9.
// Uniform doubles take the top 53 bits of the mixed word. Normal draws use
// the Box-Muller transform on two consecutive uniforms. Kaiming draws are
// uniform on [-b, b] with b = sqrt(6 / fan_in).
class CounterRng {
public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    static uint64_t word(uint64_t seed, uint64_t counter) {
        return mix(seed * 0x9E3779B97F4A7C15ull +
                   (counter + 1) * 0xBF58476D1CE4E5B9ull);
    }

    uint64_t next_u64() { return word(seed_, counter_++); }

    // [0, 1)
    double next_uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double a, double b) {
        return a + (b - a) * next_uniform01();
    }

    double next_normal(double mu, double sigma) {
        // u1 nudged away from 0 so the log stays finite
        double u1 = next_uniform01() + 0x1.0p-54;
        double u2 = next_uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.28318530717958647692528676655900577 * u2);
    }

    // index in [0, n)
    uint64_t next_index(uint64_t n) { return next_u64() % n; }

    // Independent stream for a named sub-component (FNV-1a over the tag).
    static uint64_t derive(uint64_t seed, const char* tag) {
        uint64_t h = 1469598103934665603ull;
        for (const char* p = tag; *p; ++p) {
            h ^= uint64_t((unsigned char)*p);
            h *= 1099511628211ull;
        }
        return mix(seed ^ h);
    }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace gctx
