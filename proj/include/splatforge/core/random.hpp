// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator plus the handful of distributions the pipeline needs.
// Distributions are implemented here (not via <random>) so sequences are identical across
// standard libraries. Streams are addressed by (seed, name, index), so every sampler of every
// episode draws from its own independent sequence regardless of scheduling.
//
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace splatforge {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

class Philox {
public:
    using result_type = std::uint32_t;

    explicit Philox(std::uint64_t key = 0, std::uint64_t stream = 0) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {
        ctr_[2] = static_cast<std::uint32_t>(stream);
        ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
    }

    /// Independent stream for (seed, name, index).
    static Philox stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
        return Philox(splitmix64(seed ^ splitmix64(fnv1a64(name))), splitmix64(index + 0x632BE59BD9B4E019ull));
    }

    using Block = std::array<std::uint32_t, 4>;

    /// One Philox4x32 block with 10 rounds.
    static Block round10(Block c, std::array<std::uint32_t, 2> k) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += W0;
            k[1] += W1;
        }
        return c;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }

    result_type operator()() {
        if (pos_ == 4) {
            block_ = round10(ctr_, key_);
            increment();
            pos_ = 0;
        }
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n) without modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t x;
        do x = next_u64();
        while (x >= limit);
        return x % n;
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        double u1;
        do u1 = uniform01();
        while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Normal(mean, sd) restricted to mean ± k·sd by rejection.
    double truncated_normal(double mean, double sd, double k) {
        if (sd == 0.0) return mean;
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= k) return mean + sd * z;
        }
    }

private:
    void increment() {
        if (++ctr_[0] == 0) ++ctr_[1];
    }

    std::array<std::uint32_t, 2> key_;
    Block ctr_{0, 0, 0, 0};
    Block block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace splatforge
