#include <gcslab/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace gcslab;

TEST(Philox, KnownAnswers)
{
    EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(PhiloxStream, DeterministicAndSeparated)
{
    PhiloxStream a(7, StreamId::noise, 3), b(7, StreamId::noise, 3), c(7, StreamId::noise, 4), d(8, StreamId::noise, 3);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
        EXPECT_NE(x, d.next_u64());
    }
}

TEST(PhiloxStream, UniformRanges)
{
    PhiloxStream s(1, 9);
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        const double v = s.uniform_open0();
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_LT(s.below(7), 7u);
    }
}

TEST(PhiloxStream, NormalMoments)
{
    PhiloxStream s(123, StreamId::matrix);
    const int N = 200000;
    double m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < N; ++i) {
        const double z = s.normal();
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    m1 /= N;
    m2 /= N;
    m4 /= N;
    EXPECT_NEAR(m1, 0.0, 4 / std::sqrt(N));
    EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / N));
    EXPECT_NEAR(m4, 3.0, 4 * std::sqrt(96.0 / N));
}

TEST(PhiloxStream, BelowIsRoughlyUniform)
{
    PhiloxStream s(5, StreamId::pairs);
    std::vector<int> hist(6, 0);
    const int N = 60000;
    for (int i = 0; i < N; ++i) ++hist[s.below(6)];
    for (int h : hist) EXPECT_NEAR(h, N / 6.0, 4 * std::sqrt(N / 6.0));
}
