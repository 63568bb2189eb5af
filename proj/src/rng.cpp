#include "gwflow/rng.hpp"

namespace gwflow {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, ctr[0], hi0, lo0);
        mulhilo(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

StreamFactory::StreamFactory(std::uint64_t master_seed, std::uint64_t replicate) noexcept
    : master_(master_seed), replicate_(replicate) {
    const std::uint64_t k = splitmix64(splitmix64(master_seed) ^ replicate);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

PhiloxStream StreamFactory::stream(std::uint64_t generation, std::uint64_t site, std::uint32_t tag) const noexcept {
    // Sites and generations are below 2^32 in every supported run.
    return {key_, static_cast<std::uint32_t>(site), static_cast<std::uint32_t>(generation), tag};
}

}  // namespace gwflow
