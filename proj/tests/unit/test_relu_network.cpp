#include <gcslab/relu_builder.hpp>
#include <gcslab/relu_network.hpp>

#include <support/oracles.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace gcslab;

namespace {

ReluNetwork abs_gadget()
{
    Layer h{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2)};
    h.weights << 1, -1;
    Layer o{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)};
    return ReluNetwork({h, o}, true);
}

Eigen::VectorXd scalar(double z) { return Eigen::VectorXd::Constant(1, z); }

} // namespace

TEST(Forward, IdentityLayerIsRelu)
{
    const ReluNetwork net({Layer{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)}}, false);
    Eigen::VectorXd z(2);
    z << 1, -1;
    const Eigen::VectorXd x = net.forward(z);
    EXPECT_EQ(x[0], 1.0);
    EXPECT_EQ(x[1], 0.0);
}

TEST(Forward, AbsGadget)
{
    EXPECT_EQ(abs_gadget()(-3.0), 3.0);
    EXPECT_EQ(abs_gadget()(2.5), 2.5);
}

TEST(Forward, TentPeak)
{
    EXPECT_DOUBLE_EQ(build_sawtooth(1)(0.5), 1.0);
    EXPECT_DOUBLE_EQ(build_tent()(0.25), 0.5);
}

TEST(ReluNetwork, RejectsBadShapes)
{
    EXPECT_THROW(ReluNetwork({}, true), InvalidInput);
    Layer a{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(2)};
    Layer b{Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)};
    EXPECT_THROW(ReluNetwork({a, b}, true), InvalidInput);
    Layer c{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(3)};
    EXPECT_THROW(ReluNetwork({c}, true), InvalidInput);
    Layer d{Eigen::MatrixXd::Constant(1, 1, NAN), Eigen::VectorXd::Zero(1)};
    EXPECT_THROW(ReluNetwork({d}, true), InvalidInput);
}

TEST(Combinators, ParallelDoublesWidth)
{
    const auto f = build_zigzag(3);
    const auto p = parallel({f, f});
    EXPECT_EQ(p.depth(), f.depth());
    EXPECT_EQ(p.width(), 2 * f.width());
    Eigen::VectorXd z(2);
    z << 0.3, 0.7;
    const auto x = p.forward(z);
    EXPECT_DOUBLE_EQ(x[0], f(0.3));
    EXPECT_DOUBLE_EQ(x[1], f(0.7));
}

TEST(Combinators, ComposeMatchesNestedForward)
{
    const auto f = build_f(0.25, 1.5);
    const auto g = build_g(1.0);
    const auto fg = compose(f, g);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        const double z = U(gen);
        EXPECT_NEAR(fg(z), f.forward(g.forward(scalar(z)))[0], 1e-12);
    }
}

TEST(Combinators, PaddingKeepsFunction)
{
    const auto a = abs_gadget();
    const auto padded = pad_to_depth(a, 6);
    EXPECT_EQ(padded.depth(), 6u);
    for (int i = -50; i <= 50; ++i) {
        const double z = i / 10.0;
        EXPECT_DOUBLE_EQ(padded(z), std::abs(z));
    }
}

TEST(Combinators, StackSumScalePrecompose)
{
    const auto t = build_tent();
    const auto s = stack({t, scale_output(t, -2.0)});
    const auto x = s.forward(scalar(0.3));
    EXPECT_DOUBLE_EQ(x[0], t(0.3));
    EXPECT_DOUBLE_EQ(x[1], -2 * t(0.3));
    EXPECT_DOUBLE_EQ(sum({t, t})(0.2), 2 * t(0.2));
    EXPECT_DOUBLE_EQ(precompose_affine(t, 0.5, 0.25)(0.2), t(0.35));
}

TEST(Stats, WeightsOffsetsAndPieces)
{
    const auto s = stats(build_sawtooth(4), 0.0, 1.0);
    EXPECT_EQ(s.depth, build_sawtooth(4).depth());
    EXPECT_LE(s.width, 3u);
    ASSERT_EQ(s.piece_count_per_output.size(), 1u);
    EXPECT_EQ(s.piece_count_per_output[0], 8u);
    EXPECT_DOUBLE_EQ(s.max_weight, 4.0);
}

TEST(Stats, BreakpointsAgreeWithBruteForce)
{
    for (std::uint64_t B : {1, 2, 5}) {
        const auto net = build_zigzag(B);
        const auto bp = activation_breakpoints(net, 0.0, 1.0);
        const auto brute = oracle::breakpoints([&](double z) { return net(z); }, 0.0, 1.0);
        EXPECT_EQ(piece_counts(net, 0.0, 1.0)[0] + 1, brute.size()) << "B=" << B;
        EXPECT_GE(bp.size() + 2, brute.size());
    }
}

TEST(Serialization, HexfloatRoundTrip)
{
    for (double v : {0.0, 1.0, -0.1, 1e-300, 123456.789}) EXPECT_EQ(detail::from_hexfloat(detail::to_hexfloat(v)), v);
    const auto net = build_f(0.3, 0.7);
    const auto back = network_from_json(to_json(net));
    EXPECT_EQ(back.depth(), net.depth());
    for (int i = -10; i <= 10; ++i) EXPECT_EQ(back(i / 10.0), net(i / 10.0));
    EXPECT_THROW(network_from_json(nlohmann::json::object()), std::exception);
}
