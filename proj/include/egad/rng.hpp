#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace egad {

// Deterministic pseudorandom source. std::mt19937_64 has a fixed algorithm,
// and the sampling helpers below avoid std::*_distribution, whose output is
// not pinned down by the standard, so streams are identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound) by rejection sampling; bound >= 1.
    std::uint64_t next_below(std::uint64_t bound);

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool next_bit() { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
};

// Named sub-seed so independent consumers of one base seed do not share a
// stream. splitmix64 over the base seed xored with a stream-label hash.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

// k distinct indices sampled uniformly from [0, n), in draw order.
// Returns all of [0, n) (shuffled) when k >= n.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace egad
