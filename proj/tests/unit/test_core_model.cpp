#include <gcslab/core_model.hpp>
#include <gcslab/signed_patterns.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace gcslab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

const GenModelParams P8 = GenModelParams::make(8, 2, 1.0, 1.0);

} // namespace

TEST(Generate, EndpointsGiveZero)
{
    EXPECT_EQ(generate(P8, vec({-1, -1})).values(), Eigen::VectorXd::Zero(8));
    EXPECT_EQ(generate(P8, vec({1, 1})).values().norm(), 0.0);
}

TEST(Generate, QuarterPointHitsAmplitude)
{
    const auto x = generate(P8, vec({-0.875, -1})).values();
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x.tail(7).norm(), 0.0);
    EXPECT_DOUBLE_EQ(generate(P8, vec({-0.625, -1})).values()[0], -1.0);
}

TEST(Generate, MidpointAndRisingSegment)
{
    EXPECT_NEAR(generate(P8, vec({-0.75, -1})).values()[0], 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(generate(P8, vec({-0.9375, -1})).values()[0], 0.5);
    // slope L times the offset from the left endpoint
    EXPECT_DOUBLE_EQ(P8.lipschitz() * 0.0625, 0.5);
}

TEST(Generate, OutputIsGroupSparse)
{
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> U(-1, 1);
    const auto p = GenModelParams::make(24, 3, 1.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const auto x = generate(p, vec({U(g), U(g), U(g)}));
        EXPECT_TRUE(is_group_sparse(x.values(), 3));
        EXPECT_LE(x.values().lpNorm<Eigen::Infinity>(), 2.0);
    }
}

TEST(Generate, RejectsBadInput)
{
    EXPECT_THROW(generate(P8, vec({1.5, 0})), InvalidInput);
    EXPECT_THROW(generate(P8, vec({0})), InvalidInput);
    EXPECT_THROW(GenModelParams::make(9, 2, 1, 1), InvalidInput);
    EXPECT_THROW(GenModelParams::make(8, 2, 0, 1), InvalidInput);
    EXPECT_THROW(GenModelParams::make(8, 0, 1, 1), InvalidInput);
}

TEST(Invert, ZeroSignalGoesToCorner)
{
    const Eigen::VectorXd z = invert(P8, GroupSparseSignal(Eigen::VectorXd::Zero(8), 2));
    EXPECT_EQ(z, vec({-1, -1}));
}

TEST(Invert, Examples)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
    x[0] = 1;
    const auto z = invert(P8, GroupSparseSignal(x, 2));
    EXPECT_DOUBLE_EQ(z[0], -0.875);
    EXPECT_DOUBLE_EQ(z[1], -1.0);

    x.setZero();
    x[1] = -0.5;
    const auto z2 = invert(P8, GroupSparseSignal(x, 2));
    EXPECT_DOUBLE_EQ(z2[0], -0.1875);
    EXPECT_EQ(generate(P8, z2).values(), x);
}

TEST(Invert, RoundTripOverRange)
{
    const auto p = GenModelParams::make(16, 4, 2.0, 0.5);
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 1000; ++i) {
        const auto x = generate(p, vec({U(g), U(g), U(g), U(g)}));
        EXPECT_LE((generate(p, invert(p, x)).values() - x.values()).lpNorm<Eigen::Infinity>(), 1e-14);
    }
}

TEST(Invert, RejectsOutOfRangeAmplitude)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
    x[2] = 1.5;
    EXPECT_THROW(invert(P8, GroupSparseSignal(x, 2)), InvalidInput);
}

TEST(Lipschitz, Examples)
{
    EXPECT_DOUBLE_EQ(lipschitz(GenModelParams::make(16, 4, 1, 2)), 16.0);
    EXPECT_DOUBLE_EQ(lipschitz(GenModelParams::make(1, 1, 1, 1)), 2.0);
    EXPECT_DOUBLE_EQ(lipschitz(GenModelParams::make(16, 4, 1, 4)), 2 * lipschitz(GenModelParams::make(16, 4, 1, 2)));
}

TEST(Spherical, ZeroMatchesShrunkRectangle)
{
    const auto p = GenModelParams::make(8, 2, 1.0, 1.0);
    auto inner = p;
    inner.r = 1 / std::sqrt(2.0);
    EXPECT_EQ(generate_spherical(p, vec({0, 0})).values(), generate(inner, vec({0, 0})).values());
}

TEST(Spherical, BeyondInnerCubeIsZero)
{
    const auto p = GenModelParams::make(8, 2, 1.0, 1.0);
    const auto x = generate_spherical(p, vec({1.0, 0.0}));
    EXPECT_EQ(x.values().head(4).norm(), 0.0);
    EXPECT_THROW(generate_spherical(p, vec({1.0, 0.5})), InvalidInput);
    EXPECT_NO_THROW(generate_spherical(p, vec({1.0, 0.5}), LatentDomain::linf_ball));
}

TEST(Spherical, RoundTripThroughInnerInverse)
{
    const auto p = GenModelParams::make(12, 3, 1.5, 1.0);
    const auto inner = spherical_inner_params(p);
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(-inner.r, inner.r);
    for (int i = 0; i < 200; ++i) {
        const auto x = generate(inner, vec({U(g), U(g), U(g)}));
        const auto z = invert(inner, x);
        EXPECT_LE(z.norm(), p.r);
        EXPECT_LE((generate_spherical(p, z).values() - x.values()).norm(), 1e-14);
    }
}

TEST(GroupSparse, Predicate)
{
    EXPECT_TRUE(is_group_sparse(Eigen::VectorXd::Zero(16), 4));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(16);
    x[1] = 1;
    x[6] = -2;
    x[8] = 0.5;
    x[15] = 3;
    EXPECT_TRUE(is_group_sparse(x, 4));
    x[2] = 1;
    EXPECT_FALSE(is_group_sparse(x, 4));
    EXPECT_THROW(GroupSparseSignal(x, 4), InvalidInput);
}

TEST(SignedPatterns, CountAndCodec)
{
    EXPECT_DOUBLE_EQ(signed_pattern_count(4, 2), 64.0);
    std::uint64_t seen = 0;
    for_each_signed_pattern(3, 2, 1e6, [&](std::uint64_t code, const SignedSupport& s) {
        EXPECT_EQ(code, seen);
        EXPECT_EQ(encode_pattern(s, 3), code);
        EXPECT_EQ(decode_pattern(code, 3, 2), s);
        ++seen;
    });
    EXPECT_EQ(seen, 36u);
    EXPECT_THROW(for_each_signed_pattern(100, 4, 1e6, [](std::uint64_t, const SignedSupport&) {}), CapExceeded);
}
