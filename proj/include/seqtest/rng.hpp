#pragma once

#include <cmath>
#include <cstdint>

namespace seqtest {

/// Counter-based random stream. Two streams constructed with equal
/// (seed, stream_index) emit identical variate sequences, independent of
/// where or in what order they run. That makes per-path substreams
/// reproducible in isolation, which deterministic parallel Monte Carlo
/// and common-random-numbers reuse both rely on.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index)
        : key_(mix64(mix64(seed + 0x3C6EF372FE94F82Bull) ^
                     mix64(stream_index * 0xD2B74407B1CE6E93ull + 1))) {}

    /// Uniform on (0, 1].
    double next_uniform() {
        const std::uint64_t bits = mix64(key_ ^ (counter_++ * 0x9E3779B97F4A7C15ull + 0xBULL));
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    /// Exponential with the given rate, by inverse transform.
    double next_exponential(double rate) { return -std::log(next_uniform()) / rate; }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace seqtest
