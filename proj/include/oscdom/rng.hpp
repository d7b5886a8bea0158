#pragma once

#include <cstdint>
#include <string_view>

namespace oscdom {

// Counter-based generator: every draw is a pure function of
// (seed, stream label, counter), so parallel or reordered evaluation of
// different streams cannot change any result.  SplitMix64 finalizer.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        state_ = mix(seed ^ mix(h ^ mix(index + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform in [0,1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [a,b).
    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

}  // namespace oscdom
