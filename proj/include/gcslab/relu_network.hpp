#pragma once

// Layered ReLU networks with exact structural bookkeeping.
//
// A network is a list of affine layers z^l = sigma(W_l z^{l-1} + b_l). When
// final_layer_linear() is set the last layer skips the ReLU; it still counts
// as one layer. Depth is the number of layers and width is max_l n_l over
// l = 1..d (the input dimension is not counted).

#include <gcslab/error.hpp>

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gcslab {

struct Layer
{
    Eigen::MatrixXd weights;   // n_l x n_{l-1}
    Eigen::VectorXd offsets;   // n_l
};

class ReluNetwork
{
public:
    ReluNetwork(std::vector<Layer> layers, bool final_layer_linear)
        : layers_(std::move(layers)), final_layer_linear_(final_layer_linear)
    {
        detail::require(!layers_.empty(), "ReluNetwork: at least one layer required");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            detail::require(L.weights.rows() > 0 && L.weights.cols() > 0,
                            "ReluNetwork: empty weight matrix in layer " + std::to_string(l));
            detail::require(L.weights.rows() == L.offsets.size(),
                            "ReluNetwork: offset size mismatch in layer " + std::to_string(l));
            detail::require(L.weights.allFinite() && L.offsets.allFinite(),
                            "ReluNetwork: non-finite parameter in layer " + std::to_string(l));
            if (l > 0) {
                detail::require(L.weights.cols() == layers_[l - 1].weights.rows(),
                                "ReluNetwork: layer dimensions do not chain at layer " +
                                    std::to_string(l));
            }
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    bool final_layer_linear() const { return final_layer_linear_; }

    std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weights.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }
    std::size_t depth() const { return layers_.size(); }

    std::size_t width() const
    {
        Eigen::Index w = 0;
        for (const auto& L : layers_) w = std::max(w, L.weights.rows());
        return static_cast<std::size_t>(w);
    }

    Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& z) const
    {
        detail::require(static_cast<std::size_t>(z.size()) == input_dim(),
                        "forward: input has length " + std::to_string(z.size()) +
                            ", network expects " + std::to_string(input_dim()));
        Eigen::VectorXd a = z;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Eigen::VectorXd pre = layers_[l].weights * a + layers_[l].offsets;
            if (l + 1 < layers_.size() || !final_layer_linear_) pre = pre.cwiseMax(0.0);
            a = std::move(pre);
        }
        return a;
    }

    // Scalar convenience for 1-D input, 1-D output networks.
    double operator()(double z) const
    {
        Eigen::VectorXd in(1);
        in[0] = z;
        const Eigen::VectorXd out = forward(in);
        detail::require(out.size() == 1, "ReluNetwork(double): network output is not scalar");
        return out[0];
    }

private:
    std::vector<Layer> layers_;
    bool final_layer_linear_;
};

inline Eigen::VectorXd forward(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& z)
{
    return net.forward(z);
}

namespace detail {

// [W; -W], [b; -b]: a ReLU layer whose two halves recover W a + b as
// sigma(u) - sigma(-u).
inline Layer split_layer(const Layer& L)
{
    const Eigen::Index rows = L.weights.rows();
    Layer out;
    out.weights.resize(2 * rows, L.weights.cols());
    out.weights.topRows(rows) = L.weights;
    out.weights.bottomRows(rows) = -L.weights;
    out.offsets.resize(2 * rows);
    out.offsets.head(rows) = L.offsets;
    out.offsets.tail(rows) = -L.offsets;
    return out;
}

inline Eigen::MatrixXd merge_split_cols(const Eigen::MatrixXd& W)
{
    Eigen::MatrixXd out(W.rows(), 2 * W.cols());
    out.leftCols(W.cols()) = W;
    out.rightCols(W.cols()) = -W;
    return out;
}

// Re-express a ReLU-final network with a linear final layer (identity on the
// non-negative outputs). Adds one layer.
inline ReluNetwork to_linear_final(const ReluNetwork& net)
{
    if (net.final_layer_linear()) return net;
    auto layers = net.layers();
    const auto out = static_cast<Eigen::Index>(net.output_dim());
    layers.push_back({Eigen::MatrixXd::Identity(out, out), Eigen::VectorXd::Zero(out)});
    return ReluNetwork(std::move(layers), true);
}

} // namespace detail

// Pads a network to exactly `depth` layers with identity layers. A linear
// final layer is carried through the pair sigma(u), sigma(-u), so each padded
// layer has width 2 * output_dim.
inline ReluNetwork pad_to_depth(const ReluNetwork& net, std::size_t depth)
{
    detail::require(depth >= net.depth(), "pad_to_depth: target depth below current depth");
    if (depth == net.depth()) return net;
    auto layers = net.layers();
    const auto out = static_cast<Eigen::Index>(net.output_dim());
    if (!net.final_layer_linear()) {
        while (layers.size() < depth) {
            layers.push_back({Eigen::MatrixXd::Identity(out, out), Eigen::VectorXd::Zero(out)});
        }
        return ReluNetwork(std::move(layers), false);
    }
    layers.back() = detail::split_layer(layers.back());
    while (layers.size() + 1 < depth) {
        layers.push_back({Eigen::MatrixXd::Identity(2 * out, 2 * out), Eigen::VectorXd::Zero(2 * out)});
    }
    Layer last{detail::merge_split_cols(Eigen::MatrixXd::Identity(out, out)), Eigen::VectorXd::Zero(out)};
    layers.push_back(std::move(last));
    return ReluNetwork(std::move(layers), true);
}

// outer(inner(z)). Depth is depth(outer) + depth(inner): when the inner
// network ends linearly its last layer is split into a ReLU pair and the
// outer first layer reads u = sigma(u) - sigma(-u).
inline ReluNetwork compose(const ReluNetwork& outer, const ReluNetwork& inner)
{
    detail::require(inner.output_dim() == outer.input_dim(),
                    "compose: inner output dim " + std::to_string(inner.output_dim()) +
                        " != outer input dim " + std::to_string(outer.input_dim()));
    std::vector<Layer> layers = inner.layers();
    std::vector<Layer> tail = outer.layers();
    if (inner.final_layer_linear()) {
        layers.back() = detail::split_layer(layers.back());
        tail.front().weights = detail::merge_split_cols(tail.front().weights);
    }
    for (auto& L : tail) layers.push_back(std::move(L));
    return ReluNetwork(std::move(layers), outer.final_layer_linear());
}

namespace detail {

// Block-diagonal assembly of equal-depth networks. With shared_input the
// first layers are stacked over one common input instead.
inline ReluNetwork assemble(const std::vector<ReluNetwork>& nets, bool shared_input)
{
    detail::require(!nets.empty(), "parallel/stack: no networks given");
    bool any_linear = false;
    for (const auto& n : nets) any_linear = any_linear || n.final_layer_linear();
    std::vector<ReluNetwork> norm;
    norm.reserve(nets.size());
    std::size_t depth = 0;
    for (const auto& n : nets) {
        norm.push_back(any_linear ? to_linear_final(n) : n);
        depth = std::max(depth, norm.back().depth());
    }
    for (auto& n : norm) n = pad_to_depth(n, depth);
    if (shared_input) {
        for (const auto& n : norm) {
            detail::require(n.input_dim() == norm.front().input_dim(),
                            "stack/sum: networks must share the input dimension");
        }
    }

    std::vector<Layer> layers(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        Eigen::Index rows = 0, cols = 0;
        for (const auto& n : norm) {
            rows += n.layers()[l].weights.rows();
            cols += n.layers()[l].weights.cols();
        }
        if (l == 0 && shared_input) cols = static_cast<Eigen::Index>(norm.front().input_dim());
        Layer L{Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)};
        Eigen::Index r0 = 0, c0 = 0;
        for (const auto& n : norm) {
            const auto& src = n.layers()[l];
            const Eigen::Index c = (l == 0 && shared_input) ? 0 : c0;
            L.weights.block(r0, c, src.weights.rows(), src.weights.cols()) = src.weights;
            L.offsets.segment(r0, src.offsets.size()) = src.offsets;
            r0 += src.weights.rows();
            c0 += src.weights.cols();
        }
        layers[l] = std::move(L);
    }
    return ReluNetwork(std::move(layers), any_linear);
}

} // namespace detail

// Independent inputs, concatenated outputs. Shorter branches are padded with
// identity layers so the result has the maximum branch depth.
inline ReluNetwork parallel(const std::vector<ReluNetwork>& nets)
{
    return detail::assemble(nets, false);
}

// Shared input, concatenated outputs.
inline ReluNetwork stack(const std::vector<ReluNetwork>& nets)
{
    return detail::assemble(nets, true);
}

// Shared input, outputs added in the final (linear) layer.
inline ReluNetwork sum(const std::vector<ReluNetwork>& nets)
{
    detail::require(!nets.empty(), "sum: no networks given");
    const std::size_t out = nets.front().output_dim();
    for (const auto& n : nets) {
        detail::require(n.output_dim() == out, "sum: networks must share the output dimension");
    }
    ReluNetwork stacked = detail::assemble(nets, true);
    auto layers = stacked.layers();
    if (!stacked.final_layer_linear()) {
        stacked = detail::to_linear_final(stacked);
        layers = stacked.layers();
    }
    const auto o = static_cast<Eigen::Index>(out);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(o, o * static_cast<Eigen::Index>(nets.size()));
    for (std::size_t i = 0; i < nets.size(); ++i) {
        S.block(0, o * static_cast<Eigen::Index>(i), o, o).setIdentity();
    }
    layers.back().weights = S * layers.back().weights;
    layers.back().offsets = S * layers.back().offsets;
    return ReluNetwork(std::move(layers), true);
}

// net(scale * z + shift) folded into the first layer; depth unchanged.
inline ReluNetwork precompose_affine(const ReluNetwork& net, const Eigen::MatrixXd& scale,
                                     const Eigen::VectorXd& shift)
{
    detail::require(static_cast<std::size_t>(scale.rows()) == net.input_dim() &&
                        scale.rows() == shift.size(),
                    "precompose_affine: dimension mismatch");
    auto layers = net.layers();
    layers.front().offsets = layers.front().weights * shift + layers.front().offsets;
    layers.front().weights = layers.front().weights * scale;
    return ReluNetwork(std::move(layers), net.final_layer_linear());
}

// Scalar version of precompose_affine for 1-D input networks.
inline ReluNetwork precompose_affine(const ReluNetwork& net, double scale, double shift)
{
    detail::require(net.input_dim() == 1, "precompose_affine: scalar form needs 1-D input");
    return precompose_affine(net, Eigen::MatrixXd::Constant(1, 1, scale),
                             Eigen::VectorXd::Constant(1, shift));
}

// Multiplies the (linear) output layer by a.
inline ReluNetwork scale_output(const ReluNetwork& net, double a)
{
    ReluNetwork lin = detail::to_linear_final(net);
    auto layers = lin.layers();
    layers.back().weights *= a;
    layers.back().offsets *= a;
    return ReluNetwork(std::move(layers), true);
}

// ---------------------------------------------------------------------------
// Structural statistics and exact 1-D breakpoint enumeration.

struct NetworkStats
{
    std::size_t depth = 0;
    std::size_t width = 0;
    double max_weight = 0.0;
    double max_offset = 0.0;
    std::vector<std::size_t> piece_count_per_output;   // empty unless requested
};

namespace detail {

// Pre-activations of layer `layer` at input z (1-D input).
inline Eigen::VectorXd preactivation(const ReluNetwork& net, std::size_t layer, double z)
{
    Eigen::VectorXd a = Eigen::VectorXd::Constant(1, z);
    for (std::size_t l = 0; l <= layer; ++l) {
        Eigen::VectorXd pre = net.layers()[l].weights * a + net.layers()[l].offsets;
        if (l == layer) return pre;
        a = pre.cwiseMax(0.0);
    }
    return a;
}

} // namespace detail

// All points in (lo, hi) where some ReLU in the network switches, found
// layer by layer: between consecutive known breakpoints every pre-activation
// is affine, so its zero crossing is located by linear interpolation.
inline std::vector<double> activation_breakpoints(const ReluNetwork& net, double lo, double hi)
{
    detail::require(net.input_dim() == 1, "activation_breakpoints: input_dim must be 1");
    detail::require(lo < hi, "activation_breakpoints: empty domain");
    const double merge_tol = 1e-12 * (hi - lo);
    std::vector<double> pts{lo, hi};
    const std::size_t activated = net.final_layer_linear() ? net.depth() - 1 : net.depth();
    for (std::size_t l = 0; l < activated; ++l) {
        std::vector<Eigen::VectorXd> pre;
        pre.reserve(pts.size());
        for (double p : pts) pre.push_back(detail::preactivation(net, l, p));
        std::vector<double> added;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const Eigen::VectorXd& a = pre[i];
            const Eigen::VectorXd& b = pre[i + 1];
            for (Eigen::Index u = 0; u < a.size(); ++u) {
                if ((a[u] < 0 && b[u] > 0) || (a[u] > 0 && b[u] < 0)) {
                    const double t = a[u] / (a[u] - b[u]);
                    added.push_back(pts[i] + t * (pts[i + 1] - pts[i]));
                }
            }
        }
        pts.insert(pts.end(), added.begin(), added.end());
        std::sort(pts.begin(), pts.end());
        std::vector<double> merged;
        for (double p : pts) {
            if (merged.empty() || p - merged.back() > merge_tol) merged.push_back(p);
        }
        merged.back() = hi;
        pts = std::move(merged);
    }
    return pts;
}

// Number of linear pieces of each output on [lo, hi]; adjacent pieces with
// equal slope are merged.
inline std::vector<std::size_t> piece_counts(const ReluNetwork& net, double lo, double hi)
{
    detail::require(net.input_dim() == 1, "piece_counts: only defined for input_dim 1");
    const std::vector<double> pts = activation_breakpoints(net, lo, hi);
    std::vector<Eigen::VectorXd> vals;
    vals.reserve(pts.size());
    for (double p : pts) vals.push_back(net.forward(Eigen::VectorXd::Constant(1, p)));
    const std::size_t outs = net.output_dim();
    std::vector<std::size_t> counts(outs, 1);
    for (std::size_t o = 0; o < outs; ++o) {
        std::vector<double> slopes;
        double smax = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double s = (vals[i + 1][static_cast<Eigen::Index>(o)] -
                              vals[i][static_cast<Eigen::Index>(o)]) /
                             (pts[i + 1] - pts[i]);
            slopes.push_back(s);
            smax = std::max(smax, std::abs(s));
        }
        const double tol = 1e-7 * std::max(1.0, smax);
        std::size_t pieces = 1;
        for (std::size_t i = 1; i < slopes.size(); ++i) {
            if (std::abs(slopes[i] - slopes[i - 1]) > tol) ++pieces;
        }
        counts[o] = pieces;
    }
    return counts;
}

inline NetworkStats stats(const ReluNetwork& net)
{
    NetworkStats s;
    s.depth = net.depth();
    s.width = net.width();
    for (const auto& L : net.layers()) {
        s.max_weight = std::max(s.max_weight, L.weights.cwiseAbs().maxCoeff());
        s.max_offset = std::max(s.max_offset, L.offsets.cwiseAbs().maxCoeff());
    }
    return s;
}

// Structural stats plus per-output piece counts over [lo, hi].
inline NetworkStats stats(const ReluNetwork& net, double lo, double hi)
{
    NetworkStats s = stats(net);
    s.piece_count_per_output = piece_counts(net, lo, hi);
    return s;
}

// ---------------------------------------------------------------------------
// JSON serialization. Every number is a C99 hex-float string so that a
// round trip reproduces the IEEE-754 bit pattern.

namespace detail {

inline std::string to_hexfloat(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double from_hexfloat(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw InvalidInput("network JSON: bad number '" + s + "'");
    return v;
}

} // namespace detail

inline nlohmann::json to_json(const ReluNetwork& net)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& L : net.layers()) {
        nlohmann::json W = nlohmann::json::array();
        for (Eigen::Index i = 0; i < L.weights.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < L.weights.cols(); ++j) row.push_back(detail::to_hexfloat(L.weights(i, j)));
            W.push_back(std::move(row));
        }
        nlohmann::json b = nlohmann::json::array();
        for (Eigen::Index i = 0; i < L.offsets.size(); ++i) b.push_back(detail::to_hexfloat(L.offsets[i]));
        layers.push_back({{"weights", std::move(W)}, {"offsets", std::move(b)}});
    }
    return {{"format", "gcslab-relu-network"},
            {"version", 1},
            {"encoding", "hexfloat"},
            {"input_dim", net.input_dim()},
            {"output_dim", net.output_dim()},
            {"final_layer_linear", net.final_layer_linear()},
            {"layers", std::move(layers)}};
}

inline ReluNetwork network_from_json(const nlohmann::json& j)
{
    try {
        detail::require(j.at("format").get<std::string>() == "gcslab-relu-network",
                        "network JSON: unknown format");
        detail::require(j.at("encoding").get<std::string>() == "hexfloat",
                        "network JSON: unsupported encoding");
        std::vector<Layer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto& W = jl.at("weights");
            const auto& b = jl.at("offsets");
            const auto rows = static_cast<Eigen::Index>(W.size());
            detail::require(rows > 0, "network JSON: empty layer");
            const auto cols = static_cast<Eigen::Index>(W.at(0).size());
            Layer L{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(static_cast<Eigen::Index>(b.size()))};
            for (Eigen::Index r = 0; r < rows; ++r) {
                detail::require(static_cast<Eigen::Index>(W.at(r).size()) == cols,
                                "network JSON: ragged weight matrix");
                for (Eigen::Index c = 0; c < cols; ++c) {
                    L.weights(r, c) = detail::from_hexfloat(W.at(r).at(c).get<std::string>());
                }
            }
            for (Eigen::Index r = 0; r < L.offsets.size(); ++r) {
                L.offsets[r] = detail::from_hexfloat(b.at(r).get<std::string>());
            }
            layers.push_back(std::move(L));
        }
        return ReluNetwork(std::move(layers), j.at("final_layer_linear").get<bool>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("network JSON: ") + e.what());
    }
}

} // namespace gcslab
