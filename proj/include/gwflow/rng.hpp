#pragma once

// Counter-based random streams. Every (master, replicate, generation, site,
// tag) tuple addresses its own Philox4x32-10 stream, so results do not depend
// on scheduling or worker count.

#include <array>
#include <cstdint>
#include <limits>

namespace gwflow {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block.
[[nodiscard]] PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// UniformRandomBitGenerator over a Philox stream. Word 0 of the counter is
/// the block index; words 1..3 identify the stream.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    PhiloxStream(PhiloxKey key, std::uint32_t w1, std::uint32_t w2, std::uint32_t w3) noexcept
        : key_(key), ctr_{0, w1, w2, w3} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (used_ == 2) {
            block_ = philox4x32_10(ctr_, key_);
            ++ctr_[0];
            used_ = 0;
        }
        const auto hi = static_cast<std::uint64_t>(block_[2 * used_]);
        const auto lo = static_cast<std::uint64_t>(block_[2 * used_ + 1]);
        ++used_;
        return (hi << 32) | lo;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter block_{};
    int used_ = 2;
};

/// Stream tags separating the draws made for one site in one generation.
namespace stream_tag {
inline constexpr std::uint32_t kOffspring = 0;   // ξ draws from g_0 (or the site's own pgf)
inline constexpr std::uint32_t kImmigrants = 1;  // η draws from h_m
inline constexpr std::uint32_t kInitial = 2;     // random initial condition
inline constexpr std::uint32_t kFactorBase = 16; // ξ draws from factor h_i use kFactorBase + i
}  // namespace stream_tag

class StreamFactory {
public:
    StreamFactory(std::uint64_t master_seed, std::uint64_t replicate) noexcept;

    [[nodiscard]] PhiloxStream stream(std::uint64_t generation, std::uint64_t site,
                                      std::uint32_t tag = stream_tag::kOffspring) const noexcept;

    [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_; }
    [[nodiscard]] std::uint64_t replicate() const noexcept { return replicate_; }

private:
    std::uint64_t master_;
    std::uint64_t replicate_;
    PhiloxKey key_;
};

}  // namespace gwflow
