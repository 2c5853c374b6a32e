#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace idla {

// Counter-based deterministic random stream. A stream is addressed by
// (master seed, replicate, particle); identical addresses reproduce the
// identical draw sequence regardless of thread schedule. The generator is
// splitmix64 over a hashed starting state, which is plenty for Monte Carlo
// and cheap enough for the walk inner loops.
class RngStream {
  public:
    RngStream() : state_(0x853c49e6748fea9bULL) {}

    RngStream(std::uint64_t master_seed, std::uint64_t replicate, std::uint64_t particle) {
        std::uint64_t h = master_seed;
        h = mix(h ^ (0x9e3779b97f4a7c15ULL + replicate * 0xbf58476d1ce4e5b9ULL));
        h = mix(h ^ (0x94d049bb133111ebULL + particle * 0xd6e8feb86659fd93ULL));
        state_ = h;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0, n) without modulo bias (Lemire).
    std::uint64_t next_below(std::uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = -n % n;
            while (lo < t) {
                m = static_cast<__uint128_t>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // One of {0,1,2,3}, served from a refilled 64-bit buffer (32 per draw).
    int next_direction() {
        if (dir_left_ == 0) {
            dir_bits_ = next_u64();
            dir_left_ = 32;
        }
        int d = static_cast<int>(dir_bits_ & 3u);
        dir_bits_ >>= 2;
        --dir_left_;
        return d;
    }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    // Geometric on {1,2,...} with success probability 1/2 (mean 2): the
    // position of the first set bit in a fair bit string.
    std::int64_t next_geometric_half() {
        std::int64_t g = 0;
        for (;;) {
            std::uint64_t w = next_u64();
            if (w != 0) return g + __builtin_ctzll(w) + 1;
            g += 64;
        }
    }

    // Standard normal via the polar method.
    double next_normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * f;
        have_cached_normal_ = true;
        return u * f;
    }

    // Gamma(shape, 1) by Marsaglia–Tsang; shape >= 1 is all we ever need.
    double next_gamma(double shape) {
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Poisson(mean): inversion for small means, PTRS rejection otherwise.
    std::int64_t next_poisson(double mean) {
        if (mean < 10.0) {
            double l = std::exp(-mean), p = 1.0;
            std::int64_t k = 0;
            do {
                ++k;
                p *= next_double();
            } while (p > l);
            return k - 1;
        }
        // Hörmann's PTRS transformed rejection.
        double b = 0.931 + 2.53 * std::sqrt(mean);
        double a = -0.059 + 0.02483 * b;
        double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = next_double() - 0.5;
            double v = next_double();
            double us = 0.5 - std::fabs(u);
            auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
            if (us >= 0.07 && v <= vr) return k;
            if (k < 0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0))
                return k;
        }
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    std::uint64_t dir_bits_ = 0;
    int dir_left_ = 0;
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

// Addresses the per-particle streams of one replicate.
struct StreamFamily {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;

    RngStream stream(std::uint64_t particle) const {
        return RngStream(master_seed, replicate, particle);
    }
    std::string key(std::uint64_t particle) const {
        return "seed=" + std::to_string(master_seed) + ":rep=" + std::to_string(replicate) +
               ":particle=" + std::to_string(particle);
    }
};

} // namespace idla
