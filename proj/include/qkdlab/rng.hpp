#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace qkdlab {

// Counter-based pseudo-random generator. The stream is a pure function of
// (seed, counter), so identical seeds replay identical draw sequences and
// child generators derived from (seed, label) are statistically independent
// streams. Used everywhere instead of std::mt19937 so that transcripts are
// reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    // Independent stream keyed by (seed, label).
    Rng child(std::string_view label) const {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return Rng(mix(seed_ ^ mix(h)));
    }

    std::uint64_t next_u64() { return mix(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    int next_bit() { return static_cast<int>(next_u64() >> 63); }

    bool next_bool() { return next_bit() != 0; }

    // Uniform in [0, n); n > 0. Rejection-free modulo is fine at simulation scale.
    std::uint64_t next_below(std::uint64_t n) {
        // multiply-shift map of a 64-bit draw onto [0, n)
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Knuth multiplication method; mean photon numbers here are O(1).
    int poisson(double mu) {
        if (mu <= 0.0) return 0;
        const double limit = std::exp(-mu);
        double prod = 1.0;
        int k = -1;
        do {
            prod *= next_double();
            ++k;
        } while (prod > limit);
        return k;
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace qkdlab
