#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace rslq {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11), the same
/// variant numpy ships. Each (seed, stream) pair is an independent stream;
/// outputs are a pure function of (seed, stream, position), which is what
/// makes parallel and serial Monte Carlo runs bit-identical.
class PhiloxRng {
public:
    PhiloxRng(std::uint64_t seed, std::uint64_t stream)
        : key_{seed, stream} {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            block(ctr_++, key_, buf_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on the open interval (0, 1): 53-bit mantissa, never 0 or 1.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (second draw cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Exponential with unit rate.
    double exponential() { return -std::log(uniform01()); }

    /// Raw block generator, exposed for the known-answer tests.
    static void block(std::uint64_t counter, const std::array<std::uint64_t, 2>& key,
                      std::array<std::uint64_t, 4>& out) {
        std::uint64_t c0 = counter, c1 = 0, c2 = 0, c3 = 0;
        std::uint64_t k0 = key[0], k1 = key[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t x0 = c0, x2 = c2;
            const auto p0 = static_cast<unsigned __int128>(kMult0) * x0;
            const auto p1 = static_cast<unsigned __int128>(kMult1) * x2;
            c0 = static_cast<std::uint64_t>(p1 >> 64) ^ c1 ^ k0;
            c1 = static_cast<std::uint64_t>(p1);
            c2 = static_cast<std::uint64_t>(p0 >> 64) ^ c3 ^ k1;
            c3 = static_cast<std::uint64_t>(p0);
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        out = {c0, c1, c2, c3};
    }

private:
    static constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
    static constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

    std::array<std::uint64_t, 2> key_;
    std::uint64_t ctr_ = 0;
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace rslq
