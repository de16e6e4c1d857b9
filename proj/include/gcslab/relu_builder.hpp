#pragma once

// Explicit ReLU constructions of the group-sparse generators.
//
//  * build_from_pwl           any continuous piecewise-linear 1-D map, depth 2
//  * build_g / build_f        clamp-and-double primitive and double-triangle shaper
//  * build_double_triangle_deep
//                             the rectangular-domain generator with O(1) weights
//  * build_sawtooth           2^t teeth on [0, 1] from t+1 composed tent maps
//  * build_trapezoid_shaper   half-trapezoid applied to sawtooth output
//  * build_recursive_generator
//                             k parallel copies of the multi-scale pulse map in
//                             wide, deep or mixed depth/width regimes

#include <gcslab/core_model.hpp>
#include <gcslab/error.hpp>
#include <gcslab/relu_network.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace gcslab {

// ---------------------------------------------------------------------------
// Piecewise-linear functions

struct PwlFunction
{
    std::vector<double> breakpoints;   // strictly increasing
    std::vector<double> values;        // one per breakpoint
    bool left_constant = true;         // otherwise extend the first piece linearly
    bool right_constant = true;        // otherwise extend the last piece linearly

    std::size_t piece_count() const { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }

    void validate() const
    {
        detail::require(breakpoints.size() >= 2, "PwlFunction: need at least two breakpoints");
        detail::require(breakpoints.size() == values.size(),
                        "PwlFunction: breakpoints and values differ in length");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            detail::require(std::isfinite(breakpoints[i]) && std::isfinite(values[i]),
                            "PwlFunction: non-finite breakpoint or value");
            if (i > 0) {
                detail::require(breakpoints[i] > breakpoints[i - 1],
                                "PwlFunction: breakpoints must be strictly increasing");
            }
        }
    }

    double slope(std::size_t piece) const
    {
        return (values[piece + 1] - values[piece]) / (breakpoints[piece + 1] - breakpoints[piece]);
    }

    double operator()(double z) const
    {
        const std::size_t N = piece_count();
        if (z <= breakpoints.front()) {
            return left_constant ? values.front() : values.front() + slope(0) * (z - breakpoints.front());
        }
        if (z >= breakpoints.back()) {
            return right_constant ? values.back() : values.back() + slope(N - 1) * (z - breakpoints.back());
        }
        const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), z);
        const auto i = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
        const double t = (z - breakpoints[i]) / (breakpoints[i + 1] - breakpoints[i]);
        return values[i] + t * (values[i + 1] - values[i]);
    }
};

// One hidden unit sigma(z - t_i) per slope change, plus sigma(t_0 - z) for a
// linearly extended left ray. Affine output layer; depth 2, width <= N + 2
// (N + 1 unless the left ray is linear and the right one constant).
inline ReluNetwork build_from_pwl(const PwlFunction& f)
{
    f.validate();
    const std::size_t N = f.piece_count();
    std::vector<double> knots, coeffs, signs;
    if (!f.left_constant && f.slope(0) != 0.0) {
        knots.push_back(f.breakpoints.front());
        coeffs.push_back(-f.slope(0));
        signs.push_back(-1.0);
    }
    double prev = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
        const double next = (i < N) ? f.slope(i) : (f.right_constant ? 0.0 : f.slope(N - 1));
        const double delta = next - prev;
        if (delta != 0.0) {
            knots.push_back(f.breakpoints[i]);
            coeffs.push_back(delta);
            signs.push_back(1.0);
        }
        prev = next;
    }
    if (knots.empty()) {   // constant function
        knots.push_back(f.breakpoints.front());
        coeffs.push_back(0.0);
        signs.push_back(1.0);
    }
    const auto H = static_cast<Eigen::Index>(knots.size());
    Layer hidden{Eigen::MatrixXd(H, 1), Eigen::VectorXd(H)};
    Layer out{Eigen::MatrixXd(1, H), Eigen::VectorXd::Constant(1, f.values.front())};
    for (Eigen::Index u = 0; u < H; ++u) {
        const auto i = static_cast<std::size_t>(u);
        hidden.weights(u, 0) = signs[i];
        hidden.offsets[u] = -signs[i] * knots[i];
        out.weights(0, u) = coeffs[i];
    }
    return ReluNetwork({std::move(hidden), std::move(out)}, true);
}

// ---------------------------------------------------------------------------
// Deep construction with bounded weights

// g(z) = -r on z <= -r/2, r on z >= r/2, slope 2 in between.
inline ReluNetwork build_g(double r)
{
    detail::require(std::isfinite(r) && r > 0, "build_g: r must be positive");
    Layer hidden{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd(2)};
    hidden.offsets << 0.5 * r, -0.5 * r;
    Layer out{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Constant(1, -r)};
    out.weights << 2.0, -2.0;
    return ReluNetwork({std::move(hidden), std::move(out)}, true);
}

// Double triangle on [-half_width, half_width]: 0 at both ends and at 0,
// +amplitude at -half_width/2, -amplitude at +half_width/2, zero outside.
// Hidden units read 2 v so that output coefficients stay at slope/2 scale.
inline ReluNetwork build_f(double half_width, double amplitude = 1.0)
{
    detail::require(std::isfinite(half_width) && half_width > 0, "build_f: half-width must be positive");
    detail::require(std::isfinite(amplitude), "build_f: amplitude must be finite");
    const double rho = half_width;
    const double s = 2.0 * amplitude / rho;
    Layer hidden{Eigen::MatrixXd::Constant(4, 1, 2.0), Eigen::VectorXd(4)};
    hidden.offsets << 2.0 * rho, rho, -rho, -2.0 * rho;
    Layer out{Eigen::MatrixXd(1, 4), Eigen::VectorXd::Zero(1)};
    out.weights << 0.5 * s, -s, s, -0.5 * s;
    return ReluNetwork({std::move(hidden), std::move(out)}, true);
}

struct DeepBuildConfig
{
    double x_max_cap = 1.0;   // construction assumes x_max = O(1)
    double weight_cap = 4.0;  // c_w
    double offset_cap = 4.0;  // c_b, offsets bounded by c_b * r
};

// Number of g compositions: smallest D with 2^D >= n / (2 r k).
inline std::size_t deep_composition_count(const GenModelParams& p)
{
    const double ratio = 1.0 / p.interval_len();
    std::size_t D = 0;
    while (std::ldexp(1.0, static_cast<int>(D)) < ratio * (1.0 - 1e-12)) ++D;
    return D;
}

// Realizes generate() for the rectangular model. Each output entry (block i,
// sub-interval j) is f o g^D applied to z_i - c_j, with c_j the sub-interval
// midpoint; g^D magnifies the sub-interval onto [-rho, rho], rho in [1/2, 1),
// where f draws the double triangle. Depth 2D + 2, width 4n.
inline ReluNetwork build_double_triangle_deep(const GenModelParams& params,
                                              const DeepBuildConfig& cfg = {})
{
    params.validate();
    detail::require(params.x_max <= cfg.x_max_cap,
                    "build_double_triangle_deep: x_max exceeds configured cap");
    const double ratio = 1.0 / params.interval_len();   // n / (2 r k)
    detail::require(ratio >= 1.0 - 1e-12,
                    "build_double_triangle_deep: n/(2rk) < 1, sub-intervals wider than one unit");
    const std::size_t D = deep_composition_count(params);
    const double rho = std::ldexp(1.0, static_cast<int>(D)) * params.interval_len() / 2.0;
    detail::require(rho <= params.r,
                    "build_double_triangle_deep: magnified profile exceeds the clamp range of g (r too small)");

    ReluNetwork magnify = build_g(params.r);
    ReluNetwork gD = magnify;
    for (std::size_t d = 1; d < D; ++d) gD = compose(magnify, gD);
    const ReluNetwork shaper = build_f(rho, params.x_max);
    const ReluNetwork profile = (D == 0) ? shaper : compose(shaper, gD);

    std::vector<ReluNetwork> blocks;
    blocks.reserve(params.k);
    const std::size_t len = params.block_len();
    std::vector<ReluNetwork> entries;
    entries.reserve(len);
    for (std::size_t j = 0; j < len; ++j) {
        entries.push_back(precompose_affine(profile, 1.0, -params.interval_mid(j)));
    }
    const ReluNetwork one_block = stack(entries);
    for (std::size_t i = 0; i < params.k; ++i) blocks.push_back(one_block);
    ReluNetwork net = parallel(blocks);

    const NetworkStats s = stats(net);
    detail::require(s.max_weight <= cfg.weight_cap * (1.0 + 1e-12),
                    "build_double_triangle_deep: weight bound violated");
    detail::require(s.max_offset <= cfg.offset_cap * params.r * (1.0 + 1e-12),
                    "build_double_triangle_deep: offset bound violated");
    return net;
}

// ---------------------------------------------------------------------------
// Sawtooth and trapezoid shapers

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline std::uint64_t next_power_of_two(std::uint64_t v)
{
    std::uint64_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

// Tent map on [0, 1]: 2z on [0, 1/2], 2 - 2z on [1/2, 1].
inline ReluNetwork build_tent()
{
    Layer hidden{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd(2)};
    hidden.offsets << 0.0, -0.5;
    Layer out{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
    out.weights << 2.0, -4.0;
    return ReluNetwork({std::move(hidden), std::move(out)}, true);
}

// R = 2^t triangular teeth on [0, 1] with peaks 1 at (2i + 1) / (2R).
// Width 2, depth 2t + 2.
inline ReluNetwork build_sawtooth(std::uint64_t R)
{
    detail::require(is_power_of_two(R), "build_sawtooth: R must be a power of two");
    const ReluNetwork tent = build_tent();
    ReluNetwork net = tent;
    for (std::uint64_t teeth = 1; teeth < R; teeth <<= 1) net = compose(tent, net);
    return net;
}

// B teeth on [0, 1] in a single hidden layer (width 2B + 1), any B >= 1.
inline ReluNetwork build_zigzag(std::uint64_t B)
{
    detail::require(B >= 1, "build_zigzag: need at least one tooth");
    PwlFunction f;
    const double Bd = static_cast<double>(B);
    for (std::uint64_t i = 0; i <= 2 * B; ++i) {
        f.breakpoints.push_back(static_cast<double>(i) / (2.0 * Bd));
        f.values.push_back(i % 2 == 0 ? 0.0 : 1.0);
    }
    return build_from_pwl(f);
}

// Teeth of q composed B-tooth zigzags: each of the 2B monotone sweeps of the
// inner map traces all teeth of the outer one.
inline double zigzag_power_teeth(std::uint64_t B, std::size_t q)
{
    const double b = static_cast<double>(B);
    return b * std::pow(2.0 * b, static_cast<double>(q) - 1.0);
}

// Half-trapezoid on tooth output u in [0, 1]: 0 for u <= 1 - width, height for
// u >= 1 - plateau, linear between. Composed with a tooth of span P this gives
// a trapezoidal pulse of base width*P and top plateau*P centred on the peak.
inline ReluNetwork build_trapezoid_shaper(double width, double plateau, double height)
{
    detail::require(std::isfinite(width) && std::isfinite(plateau) && std::isfinite(height),
                    "build_trapezoid_shaper: non-finite argument");
    detail::require(plateau > 0 && plateau < width && width <= 1.0,
                    "build_trapezoid_shaper: need 0 < plateau < width <= 1");
    const double a = height / (width - plateau);
    Layer hidden{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd(2)};
    hidden.offsets << -(1.0 - width), -(1.0 - plateau);
    Layer out{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
    out.weights << a, -a;
    return ReluNetwork({std::move(hidden), std::move(out)}, true);
}

// ---------------------------------------------------------------------------
// Multi-scale pulse generator
//
// For one copy (input z in [0, 1], output length n0): level l = 1..k0 splits
// every level-(l-1) cell into 2 n0/k0 sub-cells of length c_l = (k0/(2 n0))^l.
// Entry x_{(l-1) n0/k0 + j} equals +xi on sub-cell 2j and -xi on sub-cell
// 2j + 1 of every parent cell, 0 elsewhere. Rectangular pulses are replaced by
// trapezoids whose ramps lie inside the cell and have length
// transition_width * (finest cell length).

struct RecursiveGenParams
{
    std::size_t k = 1;              // parallel copies
    std::size_t k0 = 1;             // per-copy sparsity (levels)
    std::size_t n0 = 2;             // per-copy output length
    double xi = 1.0;                // pulse amplitude
    double transition_width = 0.25; // ramp length as a fraction of the finest cell

    void validate() const
    {
        detail::require(k >= 1 && k0 >= 1, "RecursiveGenParams: k and k0 must be positive");
        detail::require(n0 >= k0 && n0 % k0 == 0, "RecursiveGenParams: n0 must be a multiple of k0");
        detail::require(std::isfinite(xi) && xi > 0, "RecursiveGenParams: xi must be positive");
        detail::require(transition_width > 0 && transition_width < 0.5,
                        "RecursiveGenParams: transition_width must lie in (0, 1/2)");
    }

    std::size_t block_len() const { return n0 / k0; }
    std::size_t radix() const { return 2 * block_len(); }
    std::size_t n() const { return n0 * k; }

    // 2^{k0} (n0/k0)^{k0}
    double pattern_count() const
    {
        return std::pow(static_cast<double>(radix()), static_cast<double>(k0));
    }

    double cell_len(std::size_t level) const
    {
        return std::pow(static_cast<double>(radix()), -static_cast<double>(level));
    }

    double finest_cell() const { return cell_len(k0); }
    double ramp() const { return transition_width * finest_cell(); }
};

struct Wide {};
struct Deep {};
struct Mixed
{
    std::size_t depth = 4;       // even, >= 4
    std::uint64_t base_teeth = 0; // teeth of the depth-2 base sawtooth; 0 selects automatically
};
using Regime = std::variant<Wide, Deep, Mixed>;

inline std::string regime_name(const Regime& r)
{
    if (std::holds_alternative<Wide>(r)) return "wide";
    if (std::holds_alternative<Deep>(r)) return "deep";
    return "mixed(" + std::to_string(std::get<Mixed>(r).depth) + ")";
}

struct RecursiveBuildConfig
{
    double min_ratio = 1.0;   // pre: n0 >= min_ratio * k0
};

namespace detail {

// Idealized trapezoid: 0 outside [a, a + c], height on [a + tau, a + c - tau].
inline double trapezoid(double z, double a, double c, double tau, double height)
{
    if (z <= a || z >= a + c) return 0.0;
    if (z < a + tau) return height * (z - a) / tau;
    if (z > a + c - tau) return height * (a + c - z) / tau;
    return height;
}

struct PulseTrain
{
    std::size_t level;   // 1-based
    std::size_t j;       // entry within the level
};

// Exact piecewise-linear description of one output entry on the real line.
inline PwlFunction entry_pwl(const RecursiveGenParams& p, PulseTrain e)
{
    const double c = p.cell_len(e.level);
    const double P = p.cell_len(e.level - 1);
    const double tau = p.ramp();
    const auto parents = static_cast<std::uint64_t>(std::llround(1.0 / P));
    std::vector<double> pts;
    pts.reserve(parents * 8);
    for (std::uint64_t q = 0; q < parents; ++q) {
        const double a = static_cast<double>(q) * P + 2.0 * static_cast<double>(e.j) * c;
        for (double t : {a, a + tau, a + c - tau, a + c, a + c + tau, a + 2 * c - tau, a + 2 * c}) {
            pts.push_back(t);
        }
    }
    std::sort(pts.begin(), pts.end());
    PwlFunction f;
    const double merge = 1e-3 * tau;
    for (double t : pts) {
        if (!f.breakpoints.empty() && t - f.breakpoints.back() <= merge) continue;
        f.breakpoints.push_back(t);
    }
    for (double t : f.breakpoints) {
        const auto q = static_cast<std::uint64_t>(std::clamp(std::floor(t / P), 0.0,
                                                              static_cast<double>(parents - 1)));
        double v = 0.0;
        for (std::uint64_t qq = (q == 0 ? 0 : q - 1); qq <= std::min(parents - 1, q + 1); ++qq) {
            const double a = static_cast<double>(qq) * P + 2.0 * static_cast<double>(e.j) * c;
            v += trapezoid(t, a, c, tau, p.xi) + trapezoid(t, a + c, c, tau, -p.xi);
        }
        f.values.push_back(v);
    }
    return f;
}

// Tooth layout for a pulse train whose pulses are centred at mu + q P.
struct ToothLayout
{
    double origin;          // z0: tooth i is centred at z0 + (i + 1/2) P
    std::uint64_t needed;   // teeth required to cover [0, 1]
};

inline ToothLayout tooth_layout(double mu, double P)
{
    double z0 = mu - 0.5 * P;
    z0 -= P * std::ceil(z0 / P - 1e-9);   // shift into (-P, 0]
    if (z0 > 0) z0 -= P;
    const double span = (1.0 - z0) / P;
    return {z0, static_cast<std::uint64_t>(std::ceil(span - 1e-9))};
}

// One signed pulse train built from an arbitrary sawtooth with `teeth` teeth.
inline ReluNetwork pulse_train(const ReluNetwork& saw, std::uint64_t teeth, const ToothLayout& lay,
                               double P, double c, double tau, double height)
{
    const double T = static_cast<double>(teeth);
    const ReluNetwork shaper = build_trapezoid_shaper(c / P, (c - 2.0 * tau) / P, height);
    const ReluNetwork aligned = precompose_affine(saw, 1.0 / (T * P), -lay.origin / (T * P));
    return compose(shaper, aligned);
}

} // namespace detail

// Idealized pattern (one +-xi per level) of the finest cell with given index.
inline Eigen::VectorXd recursive_cell_pattern(const RecursiveGenParams& p, std::uint64_t cell)
{
    p.validate();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.n0));
    const std::uint64_t radix = p.radix();
    for (std::size_t l = p.k0; l-- > 0;) {
        const std::uint64_t d = cell % radix;
        cell /= radix;
        x[static_cast<Eigen::Index>(l * p.block_len() + d / 2)] = (d % 2 == 0) ? p.xi : -p.xi;
    }
    return x;
}

inline double finest_cell_midpoint(const RecursiveGenParams& p, std::uint64_t cell)
{
    return (static_cast<double>(cell) + 0.5) * p.finest_cell();
}

// Builds k parallel copies of the multi-scale map, input dimension k and
// output dimension k * n0. The deep and mixed regimes match the idealized
// description on [0, 1]^k only; extra teeth produce pulses outside.
inline ReluNetwork build_recursive_generator(const RecursiveGenParams& p, const Regime& regime,
                                             const RecursiveBuildConfig& cfg = {})
{
    p.validate();
    detail::require(static_cast<double>(p.n0) >= cfg.min_ratio * static_cast<double>(p.k0),
                    "build_recursive_generator: n0 < min_ratio * k0");
    std::size_t q = 0;
    if (const auto* m = std::get_if<Mixed>(&regime)) {
        detail::require(m->depth >= 4 && m->depth % 2 == 0,
                        "build_recursive_generator: mixed depth must be even and >= 4");
        q = m->depth / 2 - 1;
    }
    const double tau = p.ramp();
    const std::size_t len = p.block_len();

    std::vector<ReluNetwork> entries;
    entries.reserve(p.n0);
    for (std::size_t l = 1; l <= p.k0; ++l) {
        for (std::size_t j = 0; j < len; ++j) {
            const detail::PulseTrain e{l, j};
            if (std::holds_alternative<Wide>(regime)) {
                entries.push_back(build_from_pwl(detail::entry_pwl(p, e)));
                continue;
            }
            const double c = p.cell_len(l);
            const double P = p.cell_len(l - 1);
            std::vector<ReluNetwork> trains;
            for (int sign : {1, -1}) {
                const double mu = 2.0 * static_cast<double>(j) * c + (sign > 0 ? 0.5 : 1.5) * c;
                const auto lay = detail::tooth_layout(mu, P);
                std::uint64_t teeth = 0;
                ReluNetwork saw = build_tent();
                if (std::holds_alternative<Deep>(regime)) {
                    teeth = next_power_of_two(lay.needed);
                    saw = build_sawtooth(teeth);
                } else {
                    const auto& m = std::get<Mixed>(regime);
                    std::uint64_t base = m.base_teeth;
                    if (base == 0) {
                        base = 1;
                        while (zigzag_power_teeth(base, q) < static_cast<double>(lay.needed)) ++base;
                    }
                    const double total = zigzag_power_teeth(base, q);
                    detail::require(total >= static_cast<double>(lay.needed),
                                    "build_recursive_generator: base_teeth too small for depth");
                    detail::require(total < 0x1p52, "build_recursive_generator: tooth count overflow");
                    teeth = static_cast<std::uint64_t>(total);
                    const ReluNetwork h = build_zigzag(base);
                    saw = h;
                    for (std::size_t t = 1; t < q; ++t) saw = compose(h, saw);
                }
                trains.push_back(detail::pulse_train(saw, teeth, lay, P, c, tau, sign * p.xi));
            }
            entries.push_back(sum(trains));
        }
    }
    const ReluNetwork copy = stack(entries);
    ReluNetwork net = (p.k == 1) ? copy : parallel(std::vector<ReluNetwork>(p.k, copy));
    if (const auto* m = std::get_if<Mixed>(&regime)) {
        detail::require(net.depth() == m->depth, "build_recursive_generator: mixed depth mismatch");
    }
    return net;
}

// Closed-form (depth, width) budgets of the three regimes, with the constants
// of the constructions above.
struct RegimeBudget
{
    double max_depth;
    double max_width;
};

inline RegimeBudget regime_budget(const RecursiveGenParams& p, const Regime& regime)
{
    p.validate();
    const double k = static_cast<double>(p.k);
    const double base = static_cast<double>(p.radix());
    const double k0 = static_cast<double>(p.k0);
    const double n = static_cast<double>(p.n());
    if (std::holds_alternative<Wide>(regime)) {
        // <= 7 breakpoints per parent cell, sum over levels <= (2 n0/k0)^{k0}
        return {2.0, 7.0 * k * std::pow(base, k0)};
    }
    if (std::holds_alternative<Deep>(regime)) {
        // teeth <= 2 ((2 n0/k0)^{k0-1} + 1), depth 2 log2(teeth) + 4
        return {2.0 * (k0 - 1.0) * std::log2(base) + 8.0, 4.0 * n};
    }
    const auto& m = std::get<Mixed>(regime);
    const double q = static_cast<double>(m.depth) / 2.0 - 1.0;
    // base teeth <= (R + 1)^{1/q} + 1, width per entry 2 (2 base + 1)
    const double teeth = std::pow(std::pow(base, k0 - 1.0) + 1.0, 1.0 / q) + 1.0;
    return {static_cast<double>(m.depth), n * (4.0 * teeth + 2.0)};
}

} // namespace gcslab
