#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "ridfr/tensor.hpp"

namespace ridfr {

// PCG32: small deterministic generator, bit-stable across platforms.
// All randomness in the project flows through explicitly seeded instances
// so every pipeline stage is replayable.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t seq = 0) {
        state_ = 0u;
        inc_ = (seq << 1u) | 1u;
        next();
        state_ += seed;
        next();
    }

    uint32_t next() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // [0, 1)
    double uniform() { return next() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
        uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
        return lo + static_cast<int>(static_cast<uint64_t>(uniform() * static_cast<double>(span)));
    }

    // Box-Muller; generates pairs, caches the second sample.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-12);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    void fill_gaussian(Tensor& t, float stddev = 1.0f) {
        for (float& x : t.v) x = static_cast<float>(gaussian()) * stddev;
    }

    void fill_uniform(Tensor& t, float lo, float hi) {
        for (float& x : t.v) x = static_cast<float>(uniform(lo, hi));
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer, used to derive independent stream seeds from
// (stage seed, step, slot) style tuples.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// FNV-1a 64-bit, used for artifact/content hashing.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 14695981039346656037ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(uint64_t h);

}  // namespace ridfr
