#pragma once

// Analytic sample-complexity quantities and the combinatorial oracles behind
// them. Natural logarithms throughout.

#include <gcslab/error.hpp>
#include <gcslab/signed_patterns.hpp>

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gcslab {

struct BoundConstants
{
    double C0 = 4.0;        // packing validity: n >= C0 k
    double C1 = 1.0;        // target risk C1 * alpha
    double C_A = 1.0;       // ||A||_F^2 = C_A n
    double C_upper = 1.0;   // universal constant of the upper bounds
    double c_valid = 10.0;  // implied constant of L >= c (1/r) sqrt(alpha/k)

    void validate() const
    {
        for (double v : {C0, C1, C_A, C_upper, c_valid}) {
            detail::require(std::isfinite(v) && v > 0, "BoundConstants: constants must be positive");
        }
    }
};

inline constexpr const char* kLogBase = "e";

namespace detail {

inline void require_ratio(std::size_t n, std::size_t k, double C0, const char* who)
{
    require(k > 0 && n > 0 && n % k == 0, std::string(who) + ": n must be a positive multiple of k");
    if (static_cast<double>(n) < C0 * static_cast<double>(k)) {
        throw InvalidInput(std::string(who) + ": requires n >= C0 k (C0 = " + std::to_string(C0) +
                           ", threshold n >= " + std::to_string(C0 * static_cast<double>(k)) + ")");
    }
}

inline double log_choose(double a, double b)
{
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

// log(sum exp(x_i))
inline double log_sum_exp(const std::vector<double>& xs)
{
    if (xs.empty()) return -INFINITY;
    const double mx = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Covering numbers of the cube B_inf^k(r) in the Euclidean metric

inline double covering_bound(std::size_t k, double r, double eps)
{
    detail::require(k > 0, "covering_bound: k must be positive");
    detail::require(r > 0 && eps > 0, "covering_bound: r and eps must be positive");
    const double kd = static_cast<double>(k);
    return std::pow(1.0 + 2.0 * std::sqrt(kd) * r / eps, kd);
}

struct CoveringNet
{
    std::vector<Eigen::VectorXd> centers;
    double grid_step = 0.0;
    double accept_radius = 0.0;   // every grid point lies within this of a centre
};

// Greedy net over a grid of spacing eps/16, scanned in raster order. The first
// grid point p with no centre within rho = eps - step*sqrt(k)/2 gets a centre
// at p + rho (1, ..., 1)/sqrt(k) (clamped into the cube), which still covers p. Every point of
// the cube is then within eps of some centre.
inline CoveringNet greedy_covering_net(std::size_t k, double r, double eps)
{
    detail::require(k == 1 || k == 2, "covering_oracle: only k in {1, 2} is supported");
    detail::require(r > 0 && eps > 0, "covering_oracle: r and eps must be positive");
    const double kd = static_cast<double>(k);
    auto per_dim = static_cast<std::size_t>(std::ceil(2.0 * r / (eps / 16.0))) + 1;
    detail::require(std::pow(static_cast<double>(per_dim), kd) <= 4e6,
                    "covering_oracle: grid too fine for r / eps");
    const double step = 2.0 * r / static_cast<double>(per_dim - 1);
    CoveringNet net;
    net.grid_step = step;
    net.accept_radius = eps - 0.5 * step * std::sqrt(kd);
    const double rad2 = net.accept_radius * net.accept_radius;
    const double shift = net.accept_radius / std::sqrt(kd);
    const std::size_t total = (k == 1) ? per_dim : per_dim * per_dim;
    Eigen::VectorXd p(static_cast<Eigen::Index>(k));
    for (std::size_t idx = 0; idx < total; ++idx) {
        p[0] = -r + step * static_cast<double>(idx % per_dim);
        if (k == 2) p[1] = -r + step * static_cast<double>(idx / per_dim);
        bool covered = false;
        for (const auto& c : net.centers) {
            if ((c - p).squaredNorm() <= rad2) { covered = true; break; }
        }
        if (!covered) {
            Eigen::VectorXd c = p;
            for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = std::min(p[i] + shift, r);
            net.centers.push_back(c);
        }
    }
    return net;
}

inline std::size_t covering_oracle(std::size_t k, double r, double eps)
{
    return greedy_covering_net(k, r, eps).centers.size();
}

// ---------------------------------------------------------------------------
// Packing family V: one signed unit entry per block

inline double hamming_threshold(std::size_t k) { return 0.5 * static_cast<double>(k); }

// log |{v' : d_H(v, v') <= t}|, identical for every v. A block contributes 0
// (same entry), 1 (sign flip) or 2 (moved entry, 2 (B - 1) choices).
inline double log_nmax_exact(std::size_t n, std::size_t k, double t)
{
    detail::require(k > 0 && n % k == 0 && n > 0, "log_nmax_exact: n must be a positive multiple of k");
    const double B = static_cast<double>(n / k);
    std::vector<double> terms;
    for (std::size_t a = 0; a <= k; ++a) {
        for (std::size_t b = 0; a + b <= k; ++b) {
            if (static_cast<double>(a + 2 * b) > t + 1e-12) continue;
            if (b > 0 && B < 2) continue;
            const double kd = static_cast<double>(k);
            double lt = detail::log_choose(kd, static_cast<double>(a)) +
                        detail::log_choose(kd - static_cast<double>(a), static_cast<double>(b));
            if (b > 0) lt += static_cast<double>(b) * std::log(2.0 * (B - 1.0));
            terms.push_back(lt);
        }
    }
    return detail::log_sum_exp(terms);
}

inline double nmax_exact(std::size_t n, std::size_t k, double t)
{
    return std::exp(log_nmax_exact(n, k, t));
}

struct PackingStats
{
    std::size_t n = 0, k = 0;
    double log_V = 0;            // k log(2n/k)
    double log_Nmax_bound = 0;   // log k + (k/2) log 2 + (k/2) log(2en/k)
    double ratio_bound = 0;      // (k/3) log(n/k)
    bool analytic_flag = false;  // log_V - log_Nmax_bound >= ratio_bound
    double log_Nmax_exact = 0;   // t = k/2
    bool exact_flag = false;     // log_V - log_Nmax_exact >= ratio_bound
};

inline PackingStats packing_stats(std::size_t n, std::size_t k)
{
    detail::require(k > 0 && n > 0 && n % k == 0, "packing_stats: n must be a positive multiple of k");
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    PackingStats s;
    s.n = n;
    s.k = k;
    s.log_V = kd * std::log(2.0 * nd / kd);
    s.log_Nmax_bound = std::log(kd) + 0.5 * kd * std::log(2.0) + 0.5 * kd * std::log(2.0 * M_E * nd / kd);
    s.ratio_bound = kd / 3.0 * std::log(nd / kd);
    s.analytic_flag = s.log_V - s.log_Nmax_bound >= s.ratio_bound;
    s.log_Nmax_exact = log_nmax_exact(n, k, hamming_threshold(k));
    s.exact_flag = s.log_V - s.log_Nmax_exact >= s.ratio_bound;
    return s;
}

// Hamming distance between two pattern codes (radix 2B digits per block).
inline std::size_t pattern_hamming(std::uint64_t a, std::uint64_t b, std::size_t block_len, std::size_t k)
{
    const std::uint64_t radix = 2 * block_len;
    std::size_t d = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t da = a % radix, db = b % radix;
        a /= radix;
        b /= radix;
        if (da == db) continue;
        d += (da / 2 == db / 2) ? 1 : 2;
    }
    return d;
}

inline constexpr double kEnumerationCap = 1048576.0;   // 2^20

struct PackingAudit
{
    std::uint64_t count = 0;        // enumerated |V|
    std::uint64_t nmax = 0;         // brute-force N_max(t)
    bool all_pairs = false;         // max taken over every v (else over a panel)
    bool separation_ok = true;      // d_H > t  =>  ||v - v'||^2 > t, checked when all_pairs
    double cov_deviation = 0;       // max |Cov[V] - (k/n) I|
};

namespace detail {

inline std::uint32_t block_distance(std::uint32_t a, std::uint32_t b)
{
    return a == b ? 0u : ((a >> 1) == (b >> 1) ? 1u : 2u);
}

inline std::vector<std::uint32_t> code_digits(std::uint64_t code, std::size_t block_len, std::size_t k)
{
    std::vector<std::uint32_t> d(k);
    for (std::size_t b = k; b-- > 0;) {
        d[b] = static_cast<std::uint32_t>(code % (2 * block_len));
        code /= 2 * block_len;
    }
    return d;
}

// Main enumeration loop; K > 0 fixes the block count at compile time.
template <std::size_t K>
void packing_pass_impl(std::size_t k_rt, std::size_t B, std::uint64_t count, std::uint32_t radix,
                       std::uint32_t tcut, const std::vector<std::uint32_t>& reps, std::int64_t* diag,
                       std::int64_t* cross, std::uint64_t* rep_hits)
{
    const std::size_t k = K > 0 ? K : k_rt;
    const std::size_t nreps = reps.size() / k;
    std::vector<std::uint32_t> dv(k, 0);
    std::uint32_t* d = dv.data();
    std::vector<std::uint64_t> hits(nreps, 0);
    std::uint64_t* const h = hits.data();
    for (std::uint64_t code = 0; code < count; ++code) {
        for (std::size_t a = 0; a < k; ++a) {
            diag[a * B + (d[a] >> 1)] += 1;
            for (std::size_t b = a + 1; b < k; ++b) {
                const std::int64_t sgn = ((d[a] ^ d[b]) & 1u) ? -1 : 1;
                cross[((a * k + b) * B + (d[a] >> 1)) * B + (d[b] >> 1)] += sgn;
            }
        }
        for (std::size_t r = 0; r < nreps; ++r) {
            const std::uint32_t* rp = reps.data() + r * k;
            std::uint32_t dist = 0;
            for (std::size_t a = 0; a < k; ++a) dist += block_distance(d[a], rp[a]);
            h[r] += dist <= tcut;
        }
        std::size_t a = k - 1;
        while (++d[a] == radix) {
            d[a] = 0;
            if (a == 0) break;
            --a;
        }
    }
    for (std::size_t r = 0; r < nreps; ++r) rep_hits[r] = h[r];
}

inline void packing_pass(std::size_t k, std::size_t B, std::uint64_t count, std::uint32_t radix,
                         std::uint32_t tcut, const std::vector<std::uint32_t>& reps, std::int64_t* diag,
                         std::int64_t* cross, std::uint64_t* rep_hits)
{
    switch (k) {
    case 1: return packing_pass_impl<1>(k, B, count, radix, tcut, reps, diag, cross, rep_hits);
    case 2: return packing_pass_impl<2>(k, B, count, radix, tcut, reps, diag, cross, rep_hits);
    case 3: return packing_pass_impl<3>(k, B, count, radix, tcut, reps, diag, cross, rep_hits);
    case 4: return packing_pass_impl<4>(k, B, count, radix, tcut, reps, diag, cross, rep_hits);
    default: return packing_pass_impl<0>(k, B, count, radix, tcut, reps, diag, cross, rep_hits);
    }
}

} // namespace detail

// One enumeration of V: brute-force N_max(t) and the exact covariance. Up to
// all_pairs_limit members N_max is a max over every v; above it the count is
// taken for a fixed panel of representatives, which must agree (V is
// transitive under sign flips and in-block permutations). Covariance sums are
// integers, exact before the final division.
inline PackingAudit packing_audit(std::size_t n, std::size_t k, double t, double cap = kEnumerationCap,
                                  std::uint64_t all_pairs_limit = 512)
{
    detail::require(k > 0 && n > 0 && n % k == 0, "packing_audit: n must be a positive multiple of k");
    const std::size_t B = n / k;
    const double total = signed_pattern_count(B, k);
    if (total > cap) throw CapExceeded("packing_audit: |V| exceeds enumeration cap", total, cap);
    PackingAudit out;
    out.count = static_cast<std::uint64_t>(total);
    const auto radix = static_cast<std::uint32_t>(2 * B);
    const auto tcut = static_cast<std::uint32_t>(std::floor(t + 1e-12));

    // diagonal hits per coordinate; cross-block products per (a, ia, b, ib)
    std::vector<std::int64_t> diag(n, 0);
    std::vector<std::int64_t> cross(k > 1 ? k * k * B * B : 0, 0);

    std::vector<std::uint32_t> reps;   // flattened, k digits each
    if (out.count > all_pairs_limit) {
        for (std::uint64_t c : {std::uint64_t{0}, out.count - 1, out.count / 2}) {
            const auto dg = detail::code_digits(c, B, k);
            reps.insert(reps.end(), dg.begin(), dg.end());
        }
    }
    const std::size_t nreps = reps.size() / k;
    std::vector<std::uint64_t> rep_hits(nreps, 0);

    detail::packing_pass(k, B, out.count, radix, tcut, reps, diag.data(), cross.data(), rep_hits.data());

    if (reps.empty()) {
        out.all_pairs = true;
        std::vector<std::vector<std::uint32_t>> all(out.count);
        for (std::uint64_t c = 0; c < out.count; ++c) all[c] = detail::code_digits(c, B, k);
        for (std::uint64_t v = 0; v < out.count; ++v) {
            std::uint64_t hits = 0;
            for (std::uint64_t w = 0; w < out.count; ++w) {
                std::uint32_t dist = 0, norm2 = 0;
                for (std::size_t a = 0; a < k; ++a) {
                    const std::uint32_t bd = detail::block_distance(all[v][a], all[w][a]);
                    dist += bd;
                    norm2 += bd == 1 ? 4u : bd;   // flip: (2)^2; move: 1 + 1
                }
                if (dist <= tcut) ++hits;
                if (static_cast<double>(dist) > t && !(static_cast<double>(norm2) > t)) out.separation_ok = false;
            }
            out.nmax = std::max(out.nmax, hits);
        }
    } else {
        for (std::uint64_t h : rep_hits) {
            if (h != rep_hits.front()) throw std::logic_error("packing_audit: representatives disagree");
        }
        out.nmax = rep_hits.front();
    }

    const double target = static_cast<double>(k) / static_cast<double>(n);
    for (std::int64_t v : diag) {
        out.cov_deviation = std::max(out.cov_deviation, std::abs(static_cast<double>(v) / total - target));
    }
    for (std::int64_t v : cross) {
        out.cov_deviation = std::max(out.cov_deviation, std::abs(static_cast<double>(v) / total));
    }
    return out;
}

// Brute-force N_max(t); see packing_audit.
inline std::uint64_t nmax_oracle(std::size_t n, std::size_t k, double t, double cap = kEnumerationCap)
{
    return packing_audit(n, k, t, cap).nmax;
}

// Exact Cov[V] under the uniform distribution (the mean is zero), dense.
inline Eigen::MatrixXd cov_V(std::size_t n, std::size_t k, double cap = kEnumerationCap)
{
    detail::require(k > 0 && n > 0 && n % k == 0, "cov_V: n must be a positive multiple of k");
    detail::require(n <= 4096, "cov_V: dense covariance limited to n <= 4096");
    const std::size_t B = n / k;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> acc =
        Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(
            static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for_each_signed_pattern(B, k, cap, [&](std::uint64_t, const SignedSupport& s) {
        for (std::size_t a = 0; a < k; ++a) {
            const auto ia = static_cast<Eigen::Index>(a * B + s.entries[a].index);
            for (std::size_t b = 0; b < k; ++b) {
                const auto ib = static_cast<Eigen::Index>(b * B + s.entries[b].index);
                acc(ia, ib) += s.entries[a].sign * s.entries[b].sign;
            }
        }
    });
    return acc.cast<double>() / signed_pattern_count(B, k);
}

// ---------------------------------------------------------------------------
// Mutual information, Fano, minimax

inline double mutual_info_upper(double xi, double sigma2, double frob_A2, std::size_t n, std::size_t k)
{
    detail::require(sigma2 > 0 && frob_A2 >= 0 && xi >= 0 && n > 0 && k > 0,
                    "mutual_info_upper: inputs must be positive");
    return xi * xi / (2.0 * sigma2) * static_cast<double>(k) / static_cast<double>(n) * frob_A2;
}

inline double fano_bracket(double info, double log_V, double log_Nmax)
{
    detail::require(log_V > log_Nmax, "fano_lower: requires log|V| > log N_max");
    return 1.0 - (info + std::log(2.0)) / (log_V - log_Nmax);
}

inline double fano_lower(double eps, double info, double log_V, double log_Nmax)
{
    const double bracket = fano_bracket(info, log_V, log_Nmax);
    return std::max(0.0, 0.25 * eps * eps * bracket);
}

inline double xi_choice(std::size_t n, std::size_t k, double sigma2, double frob_A2)
{
    detail::require(n > k && k > 0, "xi_choice: requires n > k");
    detail::require(sigma2 >= 0 && frob_A2 > 0, "xi_choice: requires sigma2 >= 0 and ||A||_F^2 > 0");
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return std::sqrt(nd * sigma2 * std::log(nd / kd) / (4.0 * frob_A2));
}

inline double minimax_lower(std::size_t n, std::size_t k, double sigma2, double frob_A2, double C0 = 4.0)
{
    detail::require_ratio(n, k, C0, "minimax_lower");
    detail::require(sigma2 >= 0 && frob_A2 > 0, "minimax_lower: requires sigma2 >= 0 and ||A||_F^2 > 0");
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return nd * sigma2 * kd * std::log(nd / kd) / (64.0 * frob_A2);
}

inline double required_m_lower(std::size_t n, std::size_t k, double C1, double C_A, double C0 = 4.0)
{
    detail::require_ratio(n, k, C0, "required_m_lower");
    detail::require(C1 > 0 && C_A > 0, "required_m_lower: constants must be positive");
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return kd * std::log(nd / kd) / (64.0 * C1 * C_A);
}

// Fano chain at the packing-set parameters, using the exact N_max(k/2).
struct FanoChain
{
    double xi = 0, eps = 0, info = 0;
    double log_V = 0, log_Nmax = 0;
    double bracket = 0;
    double fano = 0;
    double minimax = 0;
};

inline FanoChain fano_chain(std::size_t n, std::size_t k, double sigma2, double frob_A2, double C0 = 4.0)
{
    FanoChain c;
    c.minimax = minimax_lower(n, k, sigma2, frob_A2, C0);
    c.xi = xi_choice(n, k, sigma2, frob_A2);
    c.eps = c.xi * std::sqrt(hamming_threshold(k));
    c.info = mutual_info_upper(c.xi, sigma2, frob_A2, n, k);
    const PackingStats ps = packing_stats(n, k);
    c.log_V = ps.log_V;
    c.log_Nmax = ps.log_Nmax_exact;
    c.bracket = fano_bracket(c.info, c.log_V, c.log_Nmax);
    c.fano = fano_lower(c.eps, c.info, c.log_V, c.log_Nmax);
    return c;
}

// ---------------------------------------------------------------------------
// Lipschitz-model thresholds

struct ThmMainParams
{
    std::size_t n = 0;      // rounded to the nearest positive multiple of k
    double n_real = 0;      // C' L r k sqrt(k) / sqrt(alpha)
    double x_max = 0;       // sqrt(alpha) / (2 C' sqrt(k))
    double C_prime = 0;     // 1 / sqrt(128 C1)
};

inline double c_prime(double C1)
{
    detail::require(C1 > 0, "c_prime: C1 must be positive");
    return 1.0 / std::sqrt(128.0 * C1);
}

inline ThmMainParams thm_main_params(double L, double r, std::size_t k, double alpha, double C1,
                                     double c_valid = 10.0)
{
    detail::require(L > 0 && r > 0 && k > 0 && alpha > 0 && C1 > 0,
                    "thm_main_params: inputs must be positive");
    const double kd = static_cast<double>(k);
    const double threshold = c_valid / r * std::sqrt(alpha / kd);
    if (L < threshold) {
        throw InvalidInput("thm_main_params: L = " + std::to_string(L) + " is below c (1/r) sqrt(alpha/k) = " +
                           std::to_string(threshold) +
                           "; in this regime the zero estimate already meets the target risk");
    }
    ThmMainParams p;
    p.C_prime = c_prime(C1);
    p.n_real = p.C_prime * L * r * kd * std::sqrt(kd) / std::sqrt(alpha);
    const double blocks = std::max(1.0, std::round(p.n_real / kd));
    p.n = static_cast<std::size_t>(blocks) * k;
    p.x_max = std::sqrt(alpha) / (2.0 * p.C_prime * std::sqrt(kd));
    return p;
}

enum class Domain { rect, sphere };

inline double upper_m_lipschitz(std::size_t k, double L, double r, double alpha, Domain domain,
                                double C_upper = 1.0)
{
    detail::require(k > 0 && L > 0 && r > 0 && alpha > 0 && C_upper > 0,
                    "upper_m_lipschitz: inputs must be positive");
    const double kd = static_cast<double>(k);
    const double arg = (domain == Domain::rect ? L * r * std::sqrt(kd) : L * r) / std::sqrt(alpha);
    detail::require(arg > 1.0, "upper_m_lipschitz: log argument <= 1, no measurements are needed");
    return C_upper * kd * std::log(arg);
}

// ---------------------------------------------------------------------------
// ReLU-model thresholds

inline double upper_m_relu(std::size_t k, std::size_t d, double w, double C_upper = 1.0)
{
    detail::require(k > 0 && d > 0 && C_upper > 0, "upper_m_relu: inputs must be positive");
    detail::require(w >= 2, "upper_m_relu: requires w >= 2");
    return C_upper * static_cast<double>(k) * static_cast<double>(d) * std::log(w);
}

inline double lower_m_relu(std::size_t k, std::size_t k0, std::size_t n0, double C1, double C_A,
                           double C0 = 4.0)
{
    detail::require(k > 0, "lower_m_relu: k must be positive");
    detail::require_ratio(n0, k0, C0, "lower_m_relu");
    detail::require(C1 > 0 && C_A > 0, "lower_m_relu: constants must be positive");
    const double kk0 = static_cast<double>(k) * static_cast<double>(k0);
    return kk0 * std::log(static_cast<double>(n0) / static_cast<double>(k0)) / (64.0 * C1 * C_A);
}

// Amplitude from substituting m* into the group-sparse xi with k k0 blocks.
inline double xi_relu(std::size_t k, std::size_t k0, double alpha, double C1)
{
    detail::require(k > 0 && k0 > 0 && alpha > 0 && C1 > 0, "xi_relu: inputs must be positive");
    return std::sqrt(16.0 * C1 * alpha / (static_cast<double>(k) * static_cast<double>(k0)));
}

// ---------------------------------------------------------------------------
// Report

struct BoundInputs
{
    std::size_t n = 16, k = 2;
    std::optional<std::size_t> m;
    double r = 1.0;
    double alpha = 1.0;
    std::optional<double> L;
    std::optional<std::size_t> d;
    std::optional<double> w;
    std::optional<std::size_t> k0, n0;
};

namespace detail {

template <class F>
nlohmann::json guarded(F&& f)
{
    try {
        return f();
    } catch (const InvalidInput& e) {
        return nlohmann::json{{"error", e.what()}};
    }
}

} // namespace detail

// Every input, every output, the constants and the log base. Quantities whose
// preconditions fail carry {"error": reason} instead of a number.
inline nlohmann::json bound_report(const BoundInputs& in, const BoundConstants& C = {})
{
    C.validate();
    using nlohmann::json;
    json j;
    j["log_base"] = kLogBase;
    j["constants"] = {{"C0", C.C0}, {"C1", C.C1}, {"C_A", C.C_A}, {"C_upper", C.C_upper}, {"c_valid", C.c_valid}};
    json inputs = {{"n", in.n}, {"k", in.k}, {"r", in.r}, {"alpha", in.alpha}};
    if (in.m) inputs["m"] = *in.m;
    if (in.L) inputs["L"] = *in.L;
    if (in.d) inputs["d"] = *in.d;
    if (in.w) inputs["w"] = *in.w;
    if (in.k0) inputs["k0"] = *in.k0;
    if (in.n0) inputs["n0"] = *in.n0;
    j["inputs"] = inputs;

    const double frob = C.C_A * static_cast<double>(in.n);
    j["frob_A2"] = frob;
    j["packing"] = detail::guarded([&] {
        const auto ps = packing_stats(in.n, in.k);
        return json{{"log_V", ps.log_V},
                    {"log_Nmax_bound", ps.log_Nmax_bound},
                    {"log_Nmax_exact", ps.log_Nmax_exact},
                    {"ratio_bound", ps.ratio_bound},
                    {"analytic_flag", ps.analytic_flag},
                    {"exact_flag", ps.exact_flag}};
    });
    j["required_m_lower"] = detail::guarded([&] { return json(required_m_lower(in.n, in.k, C.C1, C.C_A, C.C0)); });
    if (in.m) {
        const double sigma2 = in.alpha / static_cast<double>(*in.m);
        j["sigma2"] = sigma2;
        j["xi_choice"] = detail::guarded([&] { return json(xi_choice(in.n, in.k, sigma2, frob)); });
        j["minimax_lower"] = detail::guarded([&] { return json(minimax_lower(in.n, in.k, sigma2, frob, C.C0)); });
        j["fano_chain"] = detail::guarded([&] {
            const auto fc = fano_chain(in.n, in.k, sigma2, frob, C.C0);
            return json{{"xi", fc.xi}, {"eps", fc.eps}, {"info", fc.info}, {"bracket", fc.bracket},
                        {"fano_lower", fc.fano}, {"minimax_lower", fc.minimax}};
        });
    }
    j["consistency"] = detail::guarded([&] {
        const double m_star = required_m_lower(in.n, in.k, C.C1, C.C_A, C.C0);
        const double at = minimax_lower(in.n, in.k, in.alpha / m_star, frob, C.C0);
        const double target = C.C1 * in.alpha;
        return json{{"minimax_at_required_m", at}, {"target", target},
                    {"ok", std::abs(at - target) <= 1e-9 * std::max(1.0, target)}};
    });
    j["theorem_params"] = detail::guarded([&] {
        const double L = in.L ? *in.L : 0.0;
        detail::require(in.L.has_value(), "L not supplied");
        const auto tp = thm_main_params(L, in.r, in.k, in.alpha, C.C1, C.c_valid);
        return json{{"n", tp.n}, {"n_real", tp.n_real}, {"x_max", tp.x_max}, {"C_prime", tp.C_prime}};
    });
    if (in.L) {
        j["upper_m_rect"] = detail::guarded(
            [&] { return json(upper_m_lipschitz(in.k, *in.L, in.r, in.alpha, Domain::rect, C.C_upper)); });
        j["upper_m_sphere"] = detail::guarded(
            [&] { return json(upper_m_lipschitz(in.k, *in.L, in.r, in.alpha, Domain::sphere, C.C_upper)); });
    }
    if (in.d && in.w) {
        j["upper_m_relu"] = detail::guarded([&] { return json(upper_m_relu(in.k, *in.d, *in.w, C.C_upper)); });
    }
    if (in.k0 && in.n0) {
        j["lower_m_relu"] =
            detail::guarded([&] { return json(lower_m_relu(in.k, *in.k0, *in.n0, C.C1, C.C_A, C.C0)); });
        j["xi_relu"] = detail::guarded([&] { return json(xi_relu(in.k, *in.k0, in.alpha, C.C1)); });
        // stated form sqrt(C2 alpha / k) with C2 = 16 C1 / k0 reproduces the substituted value
        j["xi_relu_C2"] = 16.0 * C.C1 / static_cast<double>(*in.k0);
    }
    return j;
}

} // namespace gcslab
