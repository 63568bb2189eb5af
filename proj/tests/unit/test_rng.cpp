#include <doctest.h>

#include <cmath>
#include <set>

#include "gwflow/rng.hpp"

using namespace gwflow;

TEST_CASE("philox4x32-10 known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("splitmix64 reference output") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("streams are reproducible and addressed by their coordinates") {
    const StreamFactory a(42, 3), b(42, 3);
    auto s1 = a.stream(5, 7, stream_tag::kOffspring);
    auto s2 = b.stream(5, 7, stream_tag::kOffspring);
    for (int i = 0; i < 20; ++i) {
        CHECK(s1() == s2());
    }
    std::set<std::uint64_t> firsts;
    firsts.insert(a.stream(5, 7)());
    firsts.insert(a.stream(6, 7)());
    firsts.insert(a.stream(5, 8)());
    firsts.insert(a.stream(5, 7, stream_tag::kImmigrants)());
    firsts.insert(StreamFactory(42, 4).stream(5, 7)());
    firsts.insert(StreamFactory(43, 3).stream(5, 7)());
    CHECK(firsts.size() == 6);
}

TEST_CASE("uniforms lie in [0, 1) with the right mean") {
    auto stream = StreamFactory(1, 0).stream(0, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = stream.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of n uniforms has standard deviation (12 n)^{-1/2}
    CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}
