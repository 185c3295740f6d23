#pragma once

#include <cstdint>
#include <initializer_list>

namespace alpeval {

// Deterministic 64-bit PRNG used everywhere randomness is needed, so that
// datasets, weight inits and attack starts are reproducible bit-for-bit
// across runs, platforms and reimplementations in other languages.
//
// Generator: xoshiro256++ seeded through splitmix64, both public-domain
// algorithms by Blackman & Vigna, reimplemented here from their published
// reference descriptions.

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    return mix64(state);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + next_double() * (hi - lo);
    }

    /// Uniform integer in [0, n). Rejection sampling, exactly unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= min) return r % n;
        }
    }

    /// Approximate standard normal: Irwin-Hall sum of 12 uniforms minus 6.
    /// Arithmetic-only (no libm), so sampled bytes are portable; tails are
    /// truncated at +-6 sigma.
    double normal() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += next_double();
        return s - 6.0;
    }

private:
    std::uint64_t state_[4];
};

// Named sub-streams. Every consumer derives its own seed from the user seed
// plus a stream tag (and optional indices), so adding or removing one draw
// site never shifts the values another site sees.
enum class Stream : std::uint64_t {
    init_weights = 1,
    batch_order = 2,
    blob_noise = 3,
    spiral_noise = 4,
    split_shuffle = 5,
    attack_start = 6,
    target_sample = 7,
    rademacher = 8,
    model_gen = 9,
    example_gen = 10,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                                 std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t s = detail::mix64(base + 0x9E3779B97F4A7C15ULL);
    s = detail::mix64(s ^ static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL);
    for (std::uint64_t idx : indices) {
        s = detail::mix64(s ^ (idx + 1) * 0x8CB92BA72F3D8DD7ULL);
    }
    return s;
}

}  // namespace alpeval
