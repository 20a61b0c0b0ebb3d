#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rslq/rng.hpp"

using namespace rslq;

// Known-answer blocks generated by an independent Philox4x64-10
// implementation (numpy.random.Philox with the matching counter offset).
TEST_CASE("philox known-answer vectors") {
    auto block = [](std::uint64_t ctr, std::uint64_t seed, std::uint64_t stream) {
        std::array<std::uint64_t, 4> out{};
        PhiloxRng::block(ctr, {seed, stream}, out);
        return out;
    };

    {
        auto b0 = block(0, 0x7e8ull, 7ull);
        CHECK(b0[0] == 0x1886a7684e38fb63ull);
        CHECK(b0[1] == 0x5890245093b78752ull);
        CHECK(b0[2] == 0x443b05fe7a0c2c53ull);
        CHECK(b0[3] == 0x0f57643d7bdeed92ull);
        auto b1 = block(1, 0x7e8ull, 7ull);
        CHECK(b1[0] == 0x432ce6839778571aull);
        CHECK(b1[1] == 0x054cd1d1e7e44c27ull);
        CHECK(b1[2] == 0x00b0dc5cec755323ull);
        CHECK(b1[3] == 0x6a3f244106e3335eull);
        auto b2 = block(2, 0x7e8ull, 7ull);
        CHECK(b2[0] == 0x7b812bcf256af553ull);
        CHECK(b2[1] == 0x4699e94a3ee9f7ebull);
        CHECK(b2[2] == 0x566bb25b4e8db017ull);
        CHECK(b2[3] == 0xf923beb3061eafa3ull);
    }
    {
        auto b0 = block(0, 0ull, 0ull);
        CHECK(b0[0] == 0x16554d9eca36314cull);
        CHECK(b0[1] == 0xdb20fe9d672d0fdcull);
        CHECK(b0[2] == 0xd7e772cee186176bull);
        CHECK(b0[3] == 0x7e68b68aec7ba23bull);
    }
    {
        auto b0 = block(0, 0xdeadbeefcafef00dull, 123456789ull);
        CHECK(b0[0] == 0x2837817bd6bd8d8cull);
        CHECK(b0[1] == 0x9c36fc29359e55c7ull);
        CHECK(b0[2] == 0xe52b34550ae1c52bull);
        CHECK(b0[3] == 0x53822400558511b0ull);
        auto b1 = block(1, 0xdeadbeefcafef00dull, 123456789ull);
        CHECK(b1[0] == 0xef115094a1adf6f3ull);
        CHECK(b1[1] == 0xf76a377519ba6ab2ull);
        CHECK(b1[2] == 0xa66737450799e1c1ull);
        CHECK(b1[3] == 0x81163d58f18c36a5ull);
    }
}

TEST_CASE("streams are reproducible and distinct") {
    PhiloxRng a(99, 1), b(99, 1), c(99, 2);
    bool same = true, distinct = false;
    for (int k = 0; k < 64; ++k) {
        std::uint64_t x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        same = same && (x == y);
        distinct = distinct || (x != z);
    }
    CHECK(same);
    CHECK(distinct);
}

TEST_CASE("uniform01 lies strictly inside (0,1)") {
    PhiloxRng rng(123, 5);
    for (int k = 0; k < 100000; ++k) {
        double u = rng.uniform01();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    PhiloxRng rng(2024, 0);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, s3 = 0.0;
    for (int k = 0; k < n; ++k) {
        double z = rng.normal();
        s += z;
        s2 += z * z;
        s3 += z * z * z;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    double skew = s3 / n;
    // 3-sigma bands for the sample statistics
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(skew) < 3.0 * std::sqrt(15.0 / n));
}

TEST_CASE("exponential mean") {
    PhiloxRng rng(77, 3);
    const int n = 200000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += rng.exponential();
    double mean = s / n;
    CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
}
