#pragma once

// Seedable, platform-stable random number generation.  The engine is
// xoshiro256** seeded through splitmix64; all distributions are implemented
// here so that streams are bit-identical across platforms and standard
// library versions.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "netdyn/core.hpp"

namespace netdyn {

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x = splitmix64(x);
            word = x;
        }
    }

    std::uint64_t next() {
        std::uint64_t& s0 = state_[0];
        std::uint64_t& s1 = state_[1];
        std::uint64_t& s2 = state_[2];
        std::uint64_t& s3 = state_[3];
        std::uint64_t result = rotl(s1 * 5, 7) * 9;
        std::uint64_t t = s1 << 17;
        s2 ^= s0;
        s3 ^= s1;
        s1 ^= s2;
        s0 ^= s3;
        s2 ^= t;
        s3 = rotl(s3, 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound); bound > 0.  Lemire's method.
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t x = next();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = next();
                m = static_cast<unsigned __int128>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via the polar method; one spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Poisson by inversion (Knuth) for small means, normal rounding above.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            double limit = std::exp(-lambda);
            double prod = uniform01();
            std::uint64_t k = 0;
            while (prod > limit) {
                ++k;
                prod *= uniform01();
            }
            return k;
        }
        double draw = std::round(normal(lambda, std::sqrt(lambda)));
        return draw < 0.0 ? 0 : static_cast<std::uint64_t>(draw);
    }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent stream seed from a master seed and stream tags.
// Used to give each (week, kind, replicate, ...) task its own generator so
// that results do not depend on scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

} // namespace netdyn
