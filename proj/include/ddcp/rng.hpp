#pragma once

#include <cmath>
#include <cstdint>

namespace ddcp {

// Counter-based deterministic random stream.
//
// Output n of a stream is a pure function of (key, n): the generator applies a
// SplitMix64-style finalizer to key-offset counters, so streams can be derived
// and consumed in any order (across threads, across runs) with identical
// results. Substreams are derived by hashing a salt into the key; generation
// code keys them as (base_seed, sample index, tap index).
class CounterRng {
public:
    CounterRng() = default;
    explicit CounterRng(std::uint64_t key) : key_(mix(key + kGamma)) {}

    // Independent substream; does not advance this stream.
    [[nodiscard]] CounterRng derive(std::uint64_t salt) const {
        CounterRng sub;
        sub.key_ = mix(key_ ^ mix(salt + kGamma));
        return sub;
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased-enough draw in [0, n) via multiply-shift; n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0,1] keeps the log finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    // SplitMix64 finalizer (Stafford mix13 constants).
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Salts for deriving named substreams. Centralized so the derivation tree is
// stable across the codebase.
namespace stream_salt {
inline constexpr std::uint64_t kScenario = 0x5C31;
inline constexpr std::uint64_t kTap = 0x7A11;
inline constexpr std::uint64_t kSplit = 0x5317;
inline constexpr std::uint64_t kInit = 0x1417;
inline constexpr std::uint64_t kShuffle = 0x54F1;
inline constexpr std::uint64_t kNoise = 0x4E01;
inline constexpr std::uint64_t kPredict = 0x9D1C;
}  // namespace stream_salt

}  // namespace ddcp
