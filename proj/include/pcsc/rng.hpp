#pragma once

#include <cstdint>

namespace pcsc {

// Counter-based generator: value = mix(key, counter). Substreams let parallel
// producers draw independent, reproducible variates without shared state.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))), counter_(0) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    // Uniform in [0, 1).
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, m). Rejection keeps the draw unbiased.
    std::uint64_t next_below(std::uint64_t m) {
        if (m <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % m;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace pcsc
