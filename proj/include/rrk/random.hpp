#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace rrk {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Bijection of a 128-bit counter under a 64-bit key.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to fold seeds, never as the draw source.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    return mix64(seed ^ mix64(salt));
}

/// Reproducible stream of i.i.d. Uniform(0,1) draws keyed by
/// (master_seed, stream_index). Draw k of a stream is half (k mod 2) of the
/// Philox block with counter (k/2, stream_index) under key master_seed, so the
/// sequence depends on nothing but those three numbers.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
        : seed_(master_seed), index_(stream_index) {}

    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return index_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Raw 64-bit word at the current position; advances by one.
    std::uint64_t next_u64() noexcept {
        const std::uint64_t block = counter_ >> 1;
        if (!cached_ || cached_block_ != block) {
            const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                          static_cast<std::uint32_t>(block >> 32),
                                          static_cast<std::uint32_t>(index_),
                                          static_cast<std::uint32_t>(index_ >> 32)};
            const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                                      static_cast<std::uint32_t>(seed_ >> 32)};
            out_ = Philox4x32::apply(ctr, key);
            cached_block_ = block;
            cached_ = true;
        }
        const unsigned half = static_cast<unsigned>(counter_ & 1u) * 2u;
        ++counter_;
        return (std::uint64_t{out_[half]} << 32) | out_[half + 1];
    }

    /// Uniform draw strictly inside (0,1); zero is rejected and redrawn.
    double next_tau() noexcept {
        for (;;) {
            const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    /// Independent stream for the same sample, used when a sample has to be
    /// redrawn after hitting a singular point.
    RandomStream reseeded(std::uint64_t attempt) const noexcept {
        return RandomStream(combine_seed(seed_, 0x5EED0000ull + attempt), index_);
    }

    friend bool operator==(const RandomStream& a, const RandomStream& b) noexcept {
        return a.seed_ == b.seed_ && a.index_ == b.index_ && a.counter_ == b.counter_;
    }

private:
    std::uint64_t seed_;
    std::uint64_t index_;
    std::uint64_t counter_ = 0;
    Philox4x32::Counter out_{};
    std::uint64_t cached_block_ = 0;
    bool cached_ = false;
};

inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept {
    return RandomStream(master_seed, stream_index);
}

inline double draw_tau(RandomStream& stream) noexcept { return stream.next_tau(); }

}  // namespace rrk
