#pragma once

// Group-sparse generative model on rectangular and spherical latent domains.
//
// The latent coordinate z_i drives block i of the output only. [-r, r] is cut
// into n/k equal sub-intervals; on sub-interval j the j-th entry of the block
// follows a "double triangle" (0 at both ends and the midpoint, +x_max at the
// quarter point, -x_max at the three-quarter point, linear in between) and
// every other entry of the block is zero.

#include <gcslab/error.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace gcslab {

struct GenModelParams
{
    std::size_t n = 0;    // output dimension
    std::size_t k = 0;    // latent dimension == number of blocks
    double r = 1.0;       // latent radius
    double x_max = 1.0;   // amplitude cap

    static GenModelParams make(std::size_t n, std::size_t k, double r, double x_max)
    {
        GenModelParams p{n, k, r, x_max};
        p.validate();
        return p;
    }

    void validate() const
    {
        detail::require(k > 0, "GenModelParams: k must be positive");
        detail::require(n > 0 && n % k == 0,
                        "GenModelParams: n must be a positive multiple of k (pad explicitly)");
        detail::require(std::isfinite(r) && r > 0, "GenModelParams: r must be positive");
        detail::require(std::isfinite(x_max) && x_max > 0,
                        "GenModelParams: x_max must be positive");
    }

    std::size_t block_len() const { return n / k; }

    double interval_len() const
    {
        return 2.0 * r * static_cast<double>(k) / static_cast<double>(n);
    }

    double interval_start(std::size_t j) const
    {
        return -r + static_cast<double>(j) * interval_len();
    }

    double interval_mid(std::size_t j) const
    {
        return interval_start(j) + 0.5 * interval_len();
    }

    // L = 2 n x_max / (k r).
    double lipschitz() const
    {
        return 2.0 * static_cast<double>(n) * x_max / (static_cast<double>(k) * r);
    }
};

inline double lipschitz(const GenModelParams& params)
{
    params.validate();
    return params.lipschitz();
}

inline bool is_group_sparse(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t k)
{
    detail::require(k > 0, "is_group_sparse: k must be positive");
    const auto n = static_cast<std::size_t>(x.size());
    detail::require(n > 0 && n % k == 0, "is_group_sparse: length must be a multiple of k");
    const std::size_t len = n / k;
    for (std::size_t b = 0; b < k; ++b) {
        std::size_t nnz = 0;
        for (std::size_t j = 0; j < len; ++j) {
            if (x[static_cast<Eigen::Index>(b * len + j)] != 0.0) ++nnz;
        }
        if (nnz > 1) return false;
    }
    return true;
}

// A length-n vector with at most one non-zero per block of length n/k.
class GroupSparseSignal
{
public:
    GroupSparseSignal(Eigen::VectorXd values, std::size_t k)
        : values_(std::move(values)), k_(k)
    {
        detail::require(is_group_sparse(values_, k_),
                        "GroupSparseSignal: more than one non-zero in a block");
    }

    const Eigen::VectorXd& values() const { return values_; }
    std::size_t k() const { return k_; }
    std::size_t n() const { return static_cast<std::size_t>(values_.size()); }
    std::size_t block_len() const { return n() / k_; }

private:
    Eigen::VectorXd values_;
    std::size_t k_;
};

// One (in-block index, sign) pair per block; indices are 0-based.
struct SignedSupport
{
    struct Entry
    {
        std::size_t index = 0;
        int sign = 1;
        bool operator==(const Entry&) const = default;
    };

    std::vector<Entry> entries;

    bool operator==(const SignedSupport&) const = default;

    GroupSparseSignal materialize(std::size_t block_len, double xi) const
    {
        detail::require(block_len > 0, "SignedSupport: block_len must be positive");
        const std::size_t k = entries.size();
        detail::require(k > 0, "SignedSupport: empty support");
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k * block_len));
        for (std::size_t b = 0; b < k; ++b) {
            const auto& e = entries[b];
            detail::require(e.index < block_len, "SignedSupport: index out of block");
            detail::require(e.sign == 1 || e.sign == -1, "SignedSupport: sign must be +-1");
            x[static_cast<Eigen::Index>(b * block_len + e.index)] = e.sign * xi;
        }
        return GroupSparseSignal(std::move(x), k);
    }
};

namespace detail {

// Double-triangle profile on t in [0, 1], unit amplitude.
inline double double_triangle(double t)
{
    if (t <= 0.25) return 4.0 * t;
    if (t <= 0.75) return 2.0 - 4.0 * t;
    return 4.0 * t - 4.0;
}

// Writes the block driven by z into out (length n/k). Values of z outside
// [-r, r] produce a zero block.
inline void write_block(const GenModelParams& p, double z, double* out)
{
    const std::size_t len = p.block_len();
    for (std::size_t j = 0; j < len; ++j) out[j] = 0.0;
    if (!(z >= -p.r && z <= p.r)) return;
    const double h = p.interval_len();
    const double pos = (z + p.r) / h;
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j >= len) j = len - 1;
    const double t = (z - p.interval_start(j)) / h;
    out[j] = p.x_max * double_triangle(t);
}

inline Eigen::VectorXd generate_blocks(const GenModelParams& p,
                                       const Eigen::Ref<const Eigen::VectorXd>& z)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(p.n));
    const std::size_t len = p.block_len();
    for (std::size_t i = 0; i < p.k; ++i) {
        write_block(p, z[static_cast<Eigen::Index>(i)], x.data() + i * len);
    }
    return x;
}

} // namespace detail

// Rectangular-domain generator G : B_inf^k(r) -> S_k(x_max).
inline GroupSparseSignal generate(const GenModelParams& params,
                                  const Eigen::Ref<const Eigen::VectorXd>& z)
{
    params.validate();
    detail::require(static_cast<std::size_t>(z.size()) == params.k,
                    "generate: latent vector must have length k");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        detail::require(std::isfinite(z[i]) && std::abs(z[i]) <= params.r,
                        "generate: latent coordinate outside [-r, r]");
    }
    return GroupSparseSignal(detail::generate_blocks(params, z), params.k);
}

// Same maps, extended by zero outside [-r, r] on every coordinate.
inline GroupSparseSignal generate_extended(const GenModelParams& params,
                                           const Eigen::Ref<const Eigen::VectorXd>& z)
{
    params.validate();
    detail::require(static_cast<std::size_t>(z.size()) == params.k,
                    "generate_extended: latent vector must have length k");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        detail::require(std::isfinite(z[i]), "generate_extended: non-finite latent coordinate");
    }
    return GroupSparseSignal(detail::generate_blocks(params, z), params.k);
}

// Canonical preimage: rising segment for v >= 0, segment after the midpoint
// for v < 0, -r for an all-zero block.
inline Eigen::VectorXd invert(const GenModelParams& params, const GroupSparseSignal& x)
{
    params.validate();
    detail::require(x.n() == params.n && x.k() == params.k, "invert: signal shape mismatch");
    const std::size_t len = params.block_len();
    const double quarter = 0.25 * params.interval_len();
    Eigen::VectorXd z(static_cast<Eigen::Index>(params.k));
    for (std::size_t i = 0; i < params.k; ++i) {
        double zi = -params.r;
        for (std::size_t j = 0; j < len; ++j) {
            const double v = x.values()[static_cast<Eigen::Index>(i * len + j)];
            if (v == 0.0) continue;
            detail::require(std::abs(v) <= params.x_max, "invert: entry exceeds x_max");
            const double frac = std::abs(v) / params.x_max;
            zi = (v > 0 ? params.interval_start(j) : params.interval_mid(j)) + frac * quarter;
        }
        z[static_cast<Eigen::Index>(i)] = zi;
    }
    return z;
}

// Radius-r/sqrt(k) rectangular parameters used inside the spherical domain.
inline GenModelParams spherical_inner_params(const GenModelParams& params)
{
    params.validate();
    GenModelParams inner = params;
    inner.r = params.r / std::sqrt(static_cast<double>(params.k));
    return inner;
}

enum class LatentDomain { l2_ball, linf_ball };

// Spherical-domain generator: the rectangular model with radius r/sqrt(k),
// each 1-D map extended by zero beyond [-r/sqrt(k), r/sqrt(k)]. The default
// domain is B_2^k(r); LatentDomain::linf_ball accepts the enclosing cube.
inline GroupSparseSignal generate_spherical(const GenModelParams& params,
                                            const Eigen::Ref<const Eigen::VectorXd>& z,
                                            LatentDomain domain = LatentDomain::l2_ball)
{
    params.validate();
    detail::require(static_cast<std::size_t>(z.size()) == params.k,
                    "generate_spherical: latent vector must have length k");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        detail::require(std::isfinite(z[i]), "generate_spherical: non-finite latent coordinate");
    }
    if (domain == LatentDomain::l2_ball) {
        detail::require(z.norm() <= params.r, "generate_spherical: ||z||_2 exceeds r");
    } else {
        detail::require(z.lpNorm<Eigen::Infinity>() <= params.r,
                        "generate_spherical: ||z||_inf exceeds r");
    }
    return GroupSparseSignal(detail::generate_blocks(spherical_inner_params(params), z), params.k);
}

} // namespace gcslab
