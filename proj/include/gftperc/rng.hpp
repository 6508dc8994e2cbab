#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gftperc {

// Counter-based splittable random numbers.
//
// Every draw is a pure function of a 64-bit key; keys are derived by mixing
// (seed, purpose tag, replica, node, ...) components. Parallel schedules
// therefore cannot affect results, and common-random-number couplings across
// parameter values hold by construction: the same (seed, replica, node)
// always sees the same variate.

namespace rng {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Steele-Lea-Flood / Vigna).
inline std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive(std::uint64_t key, std::uint64_t component) {
    return mix64(key ^ (component * 0xD6E8FEB86659FD93ULL + 0x2545F4914F6CDD1DULL));
}

inline std::uint64_t tag(std::string_view s) {
    // FNV-1a 64.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline double to_unit(std::uint64_t x) {
    // (0,1), never exactly 0 or 1, so logs are safe.
    return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace rng

// A stream is a key plus a counter; next() is mix64(key ^ f(counter)).
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key), counter_(0) {}

    RngStream(std::uint64_t seed, std::string_view purpose)
        : RngStream(rng::derive(rng::mix64(seed), rng::tag(purpose))) {}

    std::uint64_t key() const { return key_; }

    // Child stream; does not consume from this stream.
    RngStream split(std::uint64_t component) const {
        return RngStream(rng::derive(key_, component));
    }
    RngStream split(std::string_view purpose) const {
        return RngStream(rng::derive(key_, rng::tag(purpose)));
    }

    std::uint64_t next_u64() { return rng::derive(key_, counter_++); }

    double next_unit() { return rng::to_unit(next_u64()); }

    // Box-Muller; one normal per call (the sine branch is discarded to keep
    // draws stateless with respect to callers).
    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Bernoulli(p).
    bool next_bernoulli(double p) { return next_unit() < p; }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Multiply-shift; bias is < 2^-53 for the n used here.
        return static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

// One normal keyed directly by (key, index): used for per-node field
// generation where the draw must not depend on traversal order.
inline double keyed_normal(std::uint64_t key, std::uint64_t index) {
    const std::uint64_t k = rng::derive(key, index);
    const double u1 = rng::to_unit(rng::mix64(k ^ 0x5851F42D4C957F2DULL));
    const double u2 = rng::to_unit(rng::mix64(k ^ 0x14057B7EF767814FULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline double keyed_unit(std::uint64_t key, std::uint64_t index) {
    return rng::to_unit(rng::mix64(rng::derive(key, index) ^ 0x9FB21C651E98DF25ULL));
}

}  // namespace gftperc
