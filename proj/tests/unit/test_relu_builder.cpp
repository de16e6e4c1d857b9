#include <gcslab/core_model.hpp>
#include <gcslab/relu_builder.hpp>

#include <support/oracles.hpp>

#include <gtest/gtest.h>

#include <map>

using namespace gcslab;

namespace {

Eigen::VectorXd scalar(double z) { return Eigen::VectorXd::Constant(1, z); }

std::size_t count_pulses(const ReluNetwork& net, double level = 1.0, std::size_t grid = 1 << 14)
{
    std::size_t pulses = 0;
    bool up = false;
    for (std::size_t i = 0; i <= grid; ++i) {
        const bool on = net(static_cast<double>(i) / static_cast<double>(grid)) > 0.5 * level;
        if (on && !up) ++pulses;
        up = on;
    }
    return pulses;
}

} // namespace

TEST(BuildFromPwl, Identity)
{
    PwlFunction f{{0.0, 1.0}, {0.0, 1.0}, false, false};
    const auto net = build_from_pwl(f);
    EXPECT_LE(net.width(), 2u);
    for (int i = 0; i <= 1000; ++i) EXPECT_NEAR(net(i / 1000.0), i / 1000.0, 1e-12);
}

TEST(BuildFromPwl, DoubleTriangleMatchesModel)
{
    const auto p = GenModelParams::make(4, 1, 1.0, 0.8);
    const double a = p.interval_start(1), h = p.interval_len();
    PwlFunction f{{a, a + h / 4, a + 3 * h / 4, a + h}, {0, 0.8, -0.8, 0}, true, true};
    const auto net = build_from_pwl(f);
    for (int i = 0; i <= 4096; ++i) {
        const double z = a + h * i / 4096.0;
        EXPECT_NEAR(net(z), generate(p, scalar(z)).values()[1], 1e-9);
    }
}

TEST(BuildFromPwl, FivePiecesWidthAndDepth)
{
    PwlFunction f{{0, 0.2, 0.4, 0.6, 0.8, 1.0}, {0, 1, -1, 2, 0, 3}, false, false};
    const auto net = build_from_pwl(f);
    EXPECT_LE(net.width(), 6u);
    EXPECT_EQ(net.depth(), 2u);
    for (int i = -100; i <= 200; ++i) EXPECT_NEAR(net(i / 100.0), f(i / 100.0), 1e-12);
}

TEST(BuildFromPwl, RejectsUnsortedBreakpoints)
{
    PwlFunction f{{0, 0.5, 0.4}, {0, 1, 0}};
    EXPECT_THROW(build_from_pwl(f), InvalidInput);
    EXPECT_THROW(build_from_pwl(PwlFunction{{0, 1}, {0}}), InvalidInput);
}

TEST(BuildG, Examples)
{
    const auto g = build_g(1.0);
    EXPECT_DOUBLE_EQ(g(0.0), 0.0);
    EXPECT_DOUBLE_EQ(g(0.75), 1.0);
    EXPECT_DOUBLE_EQ(g(-3.0), -1.0);
    const auto gg = compose(g, g);
    EXPECT_DOUBLE_EQ(gg(0.25), 1.0);
    EXPECT_DOUBLE_EQ(gg(0.125), 0.5);
}

TEST(BuildG, DeepEndpointsVanish)
{
    const double r = 1.5;
    ReluNetwork net = build_g(r);
    for (int D = 1; D < 4; ++D) {
        const auto fg = compose(build_f(r), net);
        EXPECT_NEAR(fg(r), 0.0, 1e-12);
        EXPECT_NEAR(fg(-r), 0.0, 1e-12);
        net = compose(build_g(r), net);
    }
}

TEST(DeepDoubleTriangle, SmallCase)
{
    const auto p = GenModelParams::make(8, 2, 1.0, 1.0);
    EXPECT_EQ(deep_composition_count(p), 1u);
    const auto net = build_double_triangle_deep(p);
    EXPECT_EQ(net.depth(), 4u);
    Eigen::VectorXd z(2);
    z << -0.875, -1;
    EXPECT_NEAR(net.forward(z)[0], 1.0, 1e-12);
    EXPECT_LE(stats(net).max_weight, 4.0);
}

TEST(DeepDoubleTriangle, EqualsModelOnDenseGrid)
{
    for (auto [n, k, r, xm] : {std::tuple{16u, 1u, 0.5, 1.0}, std::tuple{48u, 3u, 3.0, 0.5}}) {
        const auto p = GenModelParams::make(n, k, r, xm);
        const auto net = build_double_triangle_deep(p);
        EXPECT_LE(stats(net).max_offset, 4 * r);
        Eigen::VectorXd z(static_cast<Eigen::Index>(k));
        for (int i = 0; i <= 2000; ++i) {
            z.setConstant(-r + 2 * r * i / 2000.0);
            EXPECT_NEAR((net.forward(z) - generate(p, z).values()).cwiseAbs().maxCoeff(), 0.0, 1e-9);
        }
    }
}

TEST(DeepDoubleTriangle, RejectsLargeAmplitude)
{
    EXPECT_THROW(build_double_triangle_deep(GenModelParams::make(8, 2, 1.0, 3.0)), InvalidInput);
}

TEST(Sawtooth, TeethAndBreakpoints)
{
    for (std::uint64_t R : {1, 2, 4, 8, 16, 32}) {
        const auto net = build_sawtooth(R);
        EXPECT_EQ(oracle::breakpoints([&](double z) { return net(z); }, 0, 1).size(), 2 * R + 1) << R;
        EXPECT_LE(net.width(), 3u);
        EXPECT_LE(static_cast<double>(net.depth()), 2 * std::log2(static_cast<double>(R)) + 2);
        EXPECT_EQ(count_pulses(net), R);
        for (std::uint64_t i = 0; i < R; ++i) {
            EXPECT_NEAR(net((i + 0.5) / static_cast<double>(R)), 1.0, 1e-12);
        }
    }
    EXPECT_THROW(build_sawtooth(3), InvalidInput);
    EXPECT_THROW(build_sawtooth(0), InvalidInput);
}

TEST(Zigzag, ComposedTeeth)
{
    EXPECT_DOUBLE_EQ(zigzag_power_teeth(3, 1), 3.0);
    EXPECT_DOUBLE_EQ(zigzag_power_teeth(3, 2), 18.0);
    const auto zz = compose(build_zigzag(3), build_zigzag(3));
    EXPECT_EQ(count_pulses(zz), 18u);
}

TEST(TrapezoidShaper, EndpointsAndPulses)
{
    const auto sh = build_trapezoid_shaper(1.0, 0.5, 0.7);
    EXPECT_DOUBLE_EQ(sh(1.0), 0.7);
    EXPECT_DOUBLE_EQ(sh(0.0), 0.0);
    EXPECT_EQ(count_pulses(compose(sh, build_sawtooth(4)), 0.7), 4u);
    EXPECT_THROW(build_trapezoid_shaper(0.5, 0.6, 1.0), InvalidInput);
}

TEST(Recursive, CellPatternsExamples)
{
    RecursiveGenParams p;
    p.k0 = 2;
    p.n0 = 4;
    p.xi = 0.5;
    EXPECT_DOUBLE_EQ(p.pattern_count(), 16.0);
    EXPECT_DOUBLE_EQ(finest_cell_midpoint(p, 0), 1.0 / 32);
    EXPECT_DOUBLE_EQ(finest_cell_midpoint(p, 1), 3.0 / 32);
    const auto net = build_recursive_generator(p, Wide{});
    const Eigen::VectorXd a = net.forward(scalar(1.0 / 32));
    const Eigen::VectorXd b = net.forward(scalar(3.0 / 32));
    Eigen::VectorXd ea(4), eb(4);
    ea << 0.5, 0, 0.5, 0;
    eb << 0.5, 0, -0.5, 0;
    EXPECT_LE((a - ea).norm(), 1e-12);
    EXPECT_LE((b - eb).norm(), 1e-12);
    EXPECT_LE((recursive_cell_pattern(p, 1) - eb).norm(), 0.0);
}

TEST(Recursive, EveryRegimeIsABijection)
{
    for (auto [k0, n0] : {std::pair{1u, 2u}, std::pair{1u, 4u}, std::pair{2u, 4u}, std::pair{2u, 8u}, std::pair{3u, 6u}}) {
        RecursiveGenParams p;
        p.k0 = k0;
        p.n0 = n0;
        for (const Regime& reg : {Regime{Wide{}}, Regime{Deep{}}, Regime{Mixed{4}}, Regime{Mixed{6}}}) {
            const auto net = build_recursive_generator(p, reg);
            std::map<std::vector<int>, int> seen;
            const auto cells = static_cast<std::uint64_t>(p.pattern_count());
            for (std::uint64_t c = 0; c < cells; ++c) {
                const Eigen::VectorXd x = net.forward(scalar(finest_cell_midpoint(p, c)));
                EXPECT_LE((x - recursive_cell_pattern(p, c)).cwiseAbs().maxCoeff(), 1e-9);
                ++seen[oracle::sign_key(std::vector<double>(x.data(), x.data() + x.size()), p.xi)];
            }
            EXPECT_EQ(seen.size(), oracle::signed_patterns(n0 / k0, k0, 1.0).size()) << regime_name(reg);
            const auto budget = regime_budget(p, reg);
            EXPECT_LE(static_cast<double>(net.depth()), budget.max_depth) << regime_name(reg);
            EXPECT_LE(static_cast<double>(net.width()), budget.max_width) << regime_name(reg);
        }
    }
}

TEST(Recursive, ParallelCopies)
{
    RecursiveGenParams p;
    p.k = 3;
    p.k0 = 1;
    p.n0 = 4;
    const auto net = build_recursive_generator(p, Deep{});
    EXPECT_EQ(net.output_dim(), 12u);
    Eigen::VectorXd z(3);
    z << finest_cell_midpoint(p, 0), finest_cell_midpoint(p, 3), finest_cell_midpoint(p, 5);
    const Eigen::VectorXd x = net.forward(z);
    EXPECT_NEAR(x.segment(0, 4).sum(), 1.0, 1e-9);
    EXPECT_NEAR(x.segment(4, 4).sum(), -1.0, 1e-9);
    EXPECT_NEAR(x.segment(8, 4).sum(), -1.0, 1e-9);
}

TEST(Recursive, WideBudgetExample)
{
    RecursiveGenParams p;
    p.k0 = 2;
    p.n0 = 4;
    const auto net = build_recursive_generator(p, Wide{});
    EXPECT_EQ(net.depth(), 2u);
    EXPECT_LE(static_cast<double>(net.width()), regime_budget(p, Wide{}).max_width);
}

TEST(Recursive, Validation)
{
    RecursiveGenParams p;
    p.k0 = 2;
    p.n0 = 5;
    EXPECT_THROW(build_recursive_generator(p, Wide{}), InvalidInput);
    p.n0 = 4;
    EXPECT_THROW(build_recursive_generator(p, Mixed{3}), InvalidInput);
    EXPECT_THROW(build_recursive_generator(p, Wide{}, RecursiveBuildConfig{4.0}), InvalidInput);
    EXPECT_EQ(regime_name(Mixed{6}), "mixed(6)");
}

TEST(PowerOfTwo, Helpers)
{
    EXPECT_TRUE(is_power_of_two(1));
    EXPECT_FALSE(is_power_of_two(6));
    EXPECT_EQ(next_power_of_two(5), 8u);
    EXPECT_EQ(next_power_of_two(8), 8u);
}
