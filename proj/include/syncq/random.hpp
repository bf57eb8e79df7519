#pragma once

#include <cstdint>
#include <random>

namespace syncq {

/// A reproducible source of random numbers.
///
/// A stream is identified by (seed, stream id); two streams with the same pair
/// produce the same sequence, distinct ids are seeded independently through
/// std::seed_seq. A stream has exactly one sequential owner.
class RandomStream {
public:
    using engine_type = std::mt19937_64;

    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    /// Exponential(rate) by inversion.
    double exponential(double rate);

    /// Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound);

    /// Poisson(mean) draw; mean >= 0.
    std::uint64_t poisson(double mean);

    /// A child stream derived deterministically from this stream's identity
    /// (not from its current position).
    RandomStream substream(std::uint64_t index) const;

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    engine_type engine_;
};

/// Mixes several integers into one 64-bit stream id.
std::uint64_t mix_ids(std::uint64_t a, std::uint64_t b);

}  // namespace syncq
