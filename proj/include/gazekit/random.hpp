#pragma once

#include <cmath>
#include <cstdint>

// Deterministic random numbers for reproducible sessions.
//
// Generator: SplitMix64 (Steele, Lea & Flood; the java.util.SplittableRandom
// mixer). Chosen because the algorithm is short, fully specified over uint64
// arithmetic, and trivially seedable per stream. Stream splitting: a stream
// for (seed, stream_id, index) is an independent generator seeded with
// mix(seed ^ mix(stream_id) ^ mix(index)), so sessions reproduce regardless
// of the order streams are consumed in.
//
// Floating-point draws use only IEEE arithmetic plus sqrt/log, so identical
// seeds give identical byte streams for a given libm.

namespace gazekit {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Stateless mix of a single value (used for stream derivation).
    static std::uint64_t mix(std::uint64_t x) {
        SplitMix64 g(x);
        return g.next_u64();
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via the Marsaglia polar method (spare cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double gaussian(double sigma) { return sigma * gaussian(); }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Independent generator for one (stream, index) pair under a master seed.
// Chained mixing keeps the derivation asymmetric in (stream_id, index).
inline SplitMix64 split_stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t index) {
    std::uint64_t h = SplitMix64::mix(seed);
    h = SplitMix64::mix(h ^ stream_id);
    h = SplitMix64::mix(h ^ index);
    return SplitMix64(h);
}

}  // namespace gazekit
