#pragma once

// Counter-based normal variates. Every draw is a pure function of
// (seed, stream, index), so paths can be generated in any order, in
// parallel, or regenerated piecewise without carrying generator state.
//
// Bits come from Philox4x32-10 (Salmon et al., SC'11) with
// counter = (index_lo, index_hi, stream, 0) and key = (seed_lo, seed_hi).
// Uniforms use the top 53 bits of the first two output words, shifted to the
// open interval (0,1). Normals use the cosine branch of Box-Muller on the two
// uniforms of one counter block. Results depend on std::log / std::cos /
// std::sqrt, which are correctly rounded or nearly so on all mainstream libms.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dyadic {

using Philox4x32Block = std::array<std::uint32_t, 4>;

inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += W0;
            key[1] += W1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Named sub-streams so that different consumers of one seed never overlap.
enum class Stream : std::uint32_t {
    brownian = 0,
    bridge = 1,
    initial = 2,
    probe = 3,
    bootstrap = 4,
    chain = 5,
};

class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, Stream stream) noexcept : seed_(seed), stream_(static_cast<std::uint32_t>(stream)) {}

    Philox4x32Block block(std::uint64_t index) const noexcept {
        return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream_, 0u},
                             {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    }

    /// Two independent uniforms on (0,1) from one counter block.
    std::array<double, 2> uniform_pair(std::uint64_t index) const noexcept {
        const auto b = block(index);
        return {to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]),
                to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3])};
    }

    double uniform(std::uint64_t index) const noexcept { return uniform_pair(index)[0]; }

    double normal(std::uint64_t index) const noexcept {
        const auto [u1, u2] = uniform_pair(index);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// A 64-bit child seed, for deriving per-chain or per-probe seeds.
    std::uint64_t bits(std::uint64_t index) const noexcept {
        const auto b = block(index);
        return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    static double to_unit(std::uint64_t x) noexcept {
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_;
    std::uint32_t stream_;
};

}  // namespace dyadic
