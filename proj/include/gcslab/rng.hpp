#pragma once

// Counter-based Philox4x32-10 with Box-Muller normals.
//
// A stream is addressed by (seed, id0, id1, id2): the 64-bit seed is the key,
// the three ids fill counter words 1..3 and word 0 counts blocks. Streams are
// therefore independent of scheduling and of how many values other streams
// consumed.

#include <array>
#include <cmath>
#include <cstdint>

namespace gcslab {

inline constexpr const char* kRngAlgorithm = "philox4x32-10/box-muller";

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key)
{
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
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

// Named substreams.
enum class StreamId : std::uint32_t { matrix = 1, noise = 2, signal = 3, panel = 4, pairs = 5 };

class PhiloxStream
{
public:
    PhiloxStream(std::uint64_t seed, std::uint32_t id0, std::uint32_t id1 = 0, std::uint32_t id2 = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ids_{id0, id1, id2}
    {}

    PhiloxStream(std::uint64_t seed, StreamId id, std::uint32_t id1 = 0, std::uint32_t id2 = 0)
        : PhiloxStream(seed, static_cast<std::uint32_t>(id), id1, id2)
    {}

    std::uint32_t next_u32()
    {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

    // (0, 1]
    double uniform_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53; }

    // Integer in [0, bound), rejection-free for bounds far below 2^64.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v < limit) return v % bound;
        }
    }

    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open0();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    void refill()
    {
        buf_ = philox4x32_10({block_++, ids_[0], ids_[1], ids_[2]}, key_);
        pos_ = 0;
    }

    PhiloxKey key_;
    std::array<std::uint32_t, 3> ids_;
    std::uint32_t block_ = 0;
    PhiloxBlock buf_{};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace gcslab
