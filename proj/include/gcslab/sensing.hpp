#pragma once

// Measurement model y = A x* + eta, exhaustive and latent-search decoders, and
// Monte Carlo risk estimation.

#include <gcslab/core_model.hpp>
#include <gcslab/error.hpp>
#include <gcslab/rng.hpp>
#include <gcslab/signed_patterns.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace gcslab {

// gaussian_iid draws a fresh matrix per trial; fixed draws one and reuses it.
enum class MatrixMode { gaussian_iid, fixed };

struct SensingConfig
{
    std::size_t m = 1;
    std::size_t n = 1;
    double alpha = 1.0;
    MatrixMode matrix_mode = MatrixMode::fixed;
    std::optional<double> normalize_frobenius;
    std::uint64_t seed = 0;

    void validate() const
    {
        detail::require(m >= 1 && n >= 1, "SensingConfig: m and n must be positive");
        detail::require(std::isfinite(alpha) && alpha >= 0, "SensingConfig: alpha must be non-negative");
        if (normalize_frobenius) {
            detail::require(std::isfinite(*normalize_frobenius) && *normalize_frobenius > 0,
                            "SensingConfig: Frobenius target must be positive");
        }
    }

    double sigma2() const { return alpha / static_cast<double>(m); }
};

// Entries N(0, 1/m). Row i comes from its own substream, so the first m rows
// are the same standard normals for every m (scaled by 1/sqrt(m)).
inline Eigen::MatrixXd sample_matrix(const SensingConfig& cfg, std::uint32_t draw = 0)
{
    cfg.validate();
    const auto m = static_cast<Eigen::Index>(cfg.m), n = static_cast<Eigen::Index>(cfg.n);
    Eigen::MatrixXd A(m, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
    for (Eigen::Index i = 0; i < m; ++i) {
        PhiloxStream rng(cfg.seed, StreamId::matrix, draw, static_cast<std::uint32_t>(i));
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = scale * rng.normal();
    }
    if (cfg.normalize_frobenius) A *= std::sqrt(*cfg.normalize_frobenius / A.squaredNorm());
    return A;
}

inline Eigen::VectorXd observe(const Eigen::MatrixXd& A, const Eigen::Ref<const Eigen::VectorXd>& x_star,
                               double alpha, PhiloxStream& rng)
{
    detail::require(A.cols() == x_star.size(), "observe: A has " + std::to_string(A.cols()) +
                                                   " columns but x has length " + std::to_string(x_star.size()));
    detail::require(std::isfinite(alpha) && alpha >= 0, "observe: alpha must be non-negative");
    Eigen::VectorXd y = A * x_star;
    if (alpha > 0) {
        const double sd = std::sqrt(alpha / static_cast<double>(A.rows()));
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sd * rng.normal();
    }
    return y;
}

// ---------------------------------------------------------------------------
// Exhaustive decoders over an enumerable range

struct SignedSupports
{
    double xi = 1.0;
};

struct SupportsLs
{
    double x_max = 1.0;
};

using DecoderFamily = std::variant<SignedSupports, SupportsLs>;

struct ExhaustiveResult
{
    GroupSparseSignal x;
    double residual2;          // ||y - A x||^2
    std::uint64_t candidates;
};

// Argmin of ||y - A xi v|| over v in V. Scores use the Gram form
// -2 xi <s, A^T y> + xi^2 s^T G s; the first (smallest) code wins ties.
inline ExhaustiveResult decode_signed_supports(const Eigen::VectorXd& y, const Eigen::MatrixXd& A, std::size_t k,
                                               double xi, double cap = 1048576.0)
{
    detail::require(A.rows() == y.size(), "decode_exhaustive: y length does not match A rows");
    detail::require(k > 0 && A.cols() > 0 && A.cols() % static_cast<Eigen::Index>(k) == 0,
                    "decode_exhaustive: n must be a positive multiple of k");
    const auto B = static_cast<std::size_t>(A.cols()) / k;
    const double total = signed_pattern_count(B, k);
    if (total > cap) throw CapExceeded("decode_exhaustive: |V| exceeds cap", total, cap);
    const Eigen::VectorXd c = A.transpose() * y;
    const Eigen::MatrixXd G = A.transpose() * A;
    double best = INFINITY;
    std::uint64_t best_code = 0;
    std::vector<Eigen::Index> idx(k);
    for_each_signed_pattern(B, k, cap, [&](std::uint64_t code, const SignedSupport& s) {
        double lin = 0.0, quad = 0.0;
        for (std::size_t a = 0; a < k; ++a) idx[a] = static_cast<Eigen::Index>(a * B + s.entries[a].index);
        for (std::size_t a = 0; a < k; ++a) {
            lin += s.entries[a].sign * c[idx[a]];
            quad += G(idx[a], idx[a]);
            for (std::size_t b = a + 1; b < k; ++b) {
                quad += 2.0 * s.entries[a].sign * s.entries[b].sign * G(idx[a], idx[b]);
            }
        }
        const double score = -2.0 * xi * lin + xi * xi * quad;
        if (score < best) {
            best = score;
            best_code = code;
        }
    });
    GroupSparseSignal x = decode_pattern(best_code, B, k).materialize(B, xi);
    const double res = (y - A * x.values()).squaredNorm();
    return {std::move(x), res, static_cast<std::uint64_t>(total)};
}

// Per-support least squares with ridge 1e-12, coordinates clamped to
// [-x_max, x_max]. Each block picks one of its B entries or none.
inline ExhaustiveResult decode_supports_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& A, std::size_t k,
                                           double x_max, double cap = 1048576.0)
{
    detail::require(A.rows() == y.size(), "decode_exhaustive: y length does not match A rows");
    detail::require(k > 0 && A.cols() > 0 && A.cols() % static_cast<Eigen::Index>(k) == 0,
                    "decode_exhaustive: n must be a positive multiple of k");
    detail::require(x_max > 0, "decode_exhaustive: x_max must be positive");
    const auto B = static_cast<std::size_t>(A.cols()) / k;
    const double total = std::pow(static_cast<double>(B + 1), static_cast<double>(k));
    if (total > cap) throw CapExceeded("decode_exhaustive: support count exceeds cap", total, cap);
    const auto count = static_cast<std::uint64_t>(total);
    const Eigen::Index n = A.cols();

    double best = INFINITY;
    Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> cols;
    for (std::uint64_t code = 0; code < count; ++code) {
        cols.clear();
        std::uint64_t rest = code;
        std::vector<std::uint64_t> digit(k);
        for (std::size_t b = k; b-- > 0;) {
            digit[b] = rest % (B + 1);
            rest /= (B + 1);
        }
        for (std::size_t b = 0; b < k; ++b) {
            if (digit[b] > 0) cols.push_back(static_cast<Eigen::Index>(b * B + digit[b] - 1));
        }
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        if (!cols.empty()) {
            const auto s = static_cast<Eigen::Index>(cols.size());
            Eigen::MatrixXd As(A.rows(), s);
            for (Eigen::Index i = 0; i < s; ++i) As.col(i) = A.col(cols[static_cast<std::size_t>(i)]);
            Eigen::MatrixXd N = As.transpose() * As;
            N.diagonal().array() += 1e-12;
            const Eigen::VectorXd coef = N.ldlt().solve(As.transpose() * y);
            for (Eigen::Index i = 0; i < s; ++i) {
                x[cols[static_cast<std::size_t>(i)]] = std::clamp(coef[i], -x_max, x_max);
            }
        }
        const double res = (y - A * x).squaredNorm();
        if (res < best) {
            best = res;
            best_x = x;
        }
    }
    return {GroupSparseSignal(std::move(best_x), k), best, count};
}

inline ExhaustiveResult decode_exhaustive(const Eigen::VectorXd& y, const Eigen::MatrixXd& A, std::size_t k,
                                          const DecoderFamily& family, double cap = 1048576.0)
{
    if (const auto* s = std::get_if<SignedSupports>(&family)) return decode_signed_supports(y, A, k, s->xi, cap);
    return decode_supports_ls(y, A, k, std::get<SupportsLs>(family).x_max, cap);
}

// ---------------------------------------------------------------------------
// Latent-space search

using LatentModel = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LatentSearch
{
    // Per-dimension grid coordinates; every combination is evaluated.
    std::vector<std::vector<double>> grid;
    double lo = -1.0, hi = 1.0;      // box for refinement moves
    double initial_step = 0.0;       // 0: half the widest grid spacing
    std::size_t refinement_steps = 20;

    static LatentSearch uniform(std::size_t k, double lo, double hi, std::size_t per_dim,
                                std::size_t refinement_steps = 20)
    {
        detail::require(per_dim >= 1, "decode_latent: empty grid");
        detail::require(hi > lo, "decode_latent: empty latent box");
        LatentSearch s;
        s.lo = lo;
        s.hi = hi;
        s.refinement_steps = refinement_steps;
        std::vector<double> axis(per_dim);
        const double h = (hi - lo) / static_cast<double>(per_dim);
        for (std::size_t i = 0; i < per_dim; ++i) axis[i] = lo + (static_cast<double>(i) + 0.5) * h;
        s.grid.assign(k, axis);
        return s;
    }
};

struct LatentResult
{
    Eigen::VectorXd z;
    Eigen::VectorXd x;
    double residual2 = 0;        // at z
    double grid_residual2 = 0;   // best grid point
};

// Grid search, then coordinate descent with step halving. A move is taken
// only when it strictly lowers the residual.
inline LatentResult decode_latent(const Eigen::VectorXd& y, const Eigen::MatrixXd& A, const LatentModel& G,
                                  const LatentSearch& search)
{
    detail::require(!search.grid.empty(), "decode_latent: empty grid");
    for (const auto& ax : search.grid) detail::require(!ax.empty(), "decode_latent: empty grid");
    detail::require(A.rows() == y.size(), "decode_latent: y length does not match A rows");
    const std::size_t k = search.grid.size();
    auto residual = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = G(z);
        detail::require(x.size() == A.cols(), "decode_latent: model output does not match A columns");
        return (y - A * x).squaredNorm();
    };

    std::vector<std::size_t> pos(k, 0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(k));
    Eigen::VectorXd best_z(static_cast<Eigen::Index>(k));
    double best = INFINITY;
    for (;;) {
        for (std::size_t i = 0; i < k; ++i) z[static_cast<Eigen::Index>(i)] = search.grid[i][pos[i]];
        const double r = residual(z);
        if (r < best) {
            best = r;
            best_z = z;
        }
        std::size_t d = k;
        while (d-- > 0) {
            if (++pos[d] < search.grid[d].size()) break;
            pos[d] = 0;
        }
        if (d == static_cast<std::size_t>(-1)) break;
    }

    LatentResult out;
    out.grid_residual2 = best;
    double step = search.initial_step;
    if (step <= 0) {
        for (const auto& ax : search.grid) {
            const double span = ax.size() > 1 ? (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1)
                                              : (search.hi - search.lo);
            step = std::max(step, 0.5 * span);
        }
    }
    z = best_z;
    for (std::size_t it = 0; it < search.refinement_steps; ++it, step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t i = 0; i < k; ++i) {
                for (double dir : {-1.0, 1.0}) {
                    Eigen::VectorXd cand = z;
                    auto& c = cand[static_cast<Eigen::Index>(i)];
                    c = std::clamp(c + dir * step, search.lo, search.hi);
                    const double r = residual(cand);
                    if (r < best) {
                        best = r;
                        z = cand;
                        moved = true;
                    }
                }
            }
        }
    }
    out.z = z;
    out.x = G(z);
    out.residual2 = best;
    return out;
}

// ---------------------------------------------------------------------------
// Risk estimation

namespace detail {

// Pairwise (cascade) summation; the split points depend only on the length.
inline double pairwise_sum(const double* v, std::size_t len)
{
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += v[i];
        return s;
    }
    const std::size_t half = len / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, len - half);
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace detail

struct MeanStd
{
    double mean = 0;
    double std_error = 0;
};

inline MeanStd mean_and_std_error(const std::vector<double>& v)
{
    detail::require(!v.empty(), "mean_and_std_error: no samples");
    const auto N = v.size();
    MeanStd r;
    r.mean = detail::pairwise_sum(v.data(), N) / static_cast<double>(N);
    if (N > 1) {
        std::vector<double> dev(N);
        for (std::size_t i = 0; i < N; ++i) dev[i] = (v[i] - r.mean) * (v[i] - r.mean);
        const double var = detail::pairwise_sum(dev.data(), N) / static_cast<double>(N - 1);
        r.std_error = std::sqrt(var / static_cast<double>(N));
    }
    return r;
}

enum class RiskMode { prior_averaged, worst_case_over_sampled_signals };

inline std::string risk_mode_name(RiskMode m)
{
    return m == RiskMode::prior_averaged ? "prior_averaged" : "worst_case_over_sampled_signals";
}

struct RiskEstimate
{
    double mean_sq_error = 0;
    double std_error = 0;
    std::size_t trials = 0;
    RiskMode mode = RiskMode::prior_averaged;
    std::vector<double> per_trial;   // squared errors in trial order (per panel signal for worst case)
};

// Decoder: (y, A) -> x_hat.
using Decoder = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

struct RiskConfig
{
    SensingConfig sensing;
    std::size_t k = 1;
    double xi = 1.0;                  // amplitude of the hard prior
    std::size_t trials = 100;
    RiskMode mode = RiskMode::prior_averaged;
    std::size_t panel_size = 8;       // signals in the worst-case panel
    std::size_t threads = 1;
};

// Hard prior draw: one uniform signed entry per block.
inline GroupSparseSignal draw_hard_prior(std::size_t n, std::size_t k, double xi, PhiloxStream& rng)
{
    const std::size_t B = n / k;
    SignedSupport s;
    s.entries.resize(k);
    for (auto& e : s.entries) {
        const std::uint64_t d = rng.below(2 * B);
        e.index = static_cast<std::size_t>(d / 2);
        e.sign = (d % 2 == 0) ? 1 : -1;
    }
    return s.materialize(B, xi);
}

// Trial t uses substreams indexed by t only, so results do not depend on the
// thread count. Signals come from the hard prior (fresh per trial when prior
// averaged; a fixed panel for the worst case).
inline RiskEstimate estimate_risk(const RiskConfig& cfg, const Decoder& decoder)
{
    cfg.sensing.validate();
    detail::require(cfg.trials >= 1, "estimate_risk: trials must be >= 1");
    detail::require(cfg.k > 0 && cfg.sensing.n % cfg.k == 0, "estimate_risk: n must be a multiple of k");
    const auto& sc = cfg.sensing;
    const Eigen::MatrixXd fixed_A =
        sc.matrix_mode == MatrixMode::fixed ? sample_matrix(sc, 0) : Eigen::MatrixXd();

    auto run_trial = [&](const GroupSparseSignal& x, std::uint32_t trial) {
        const Eigen::MatrixXd A = sc.matrix_mode == MatrixMode::fixed ? fixed_A : sample_matrix(sc, trial + 1);
        PhiloxStream noise(sc.seed, StreamId::noise, trial);
        const Eigen::VectorXd y = observe(A, x.values(), sc.alpha, noise);
        const Eigen::VectorXd xh = decoder(y, A);
        return (xh - x.values()).squaredNorm();
    };

    RiskEstimate est;
    est.mode = cfg.mode;
    if (cfg.mode == RiskMode::prior_averaged) {
        est.per_trial.assign(cfg.trials, 0.0);
        detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
            PhiloxStream sig(sc.seed, StreamId::signal, static_cast<std::uint32_t>(t));
            const auto x = draw_hard_prior(sc.n, cfg.k, cfg.xi, sig);
            est.per_trial[t] = run_trial(x, static_cast<std::uint32_t>(t));
        });
        const auto ms = mean_and_std_error(est.per_trial);
        est.mean_sq_error = ms.mean;
        est.std_error = ms.std_error;
        est.trials = cfg.trials;
        return est;
    }

    detail::require(cfg.panel_size >= 1, "estimate_risk: panel_size must be >= 1");
    const std::size_t per = (cfg.trials + cfg.panel_size - 1) / cfg.panel_size;
    std::vector<GroupSparseSignal> panel;
    for (std::size_t p = 0; p < cfg.panel_size; ++p) {
        PhiloxStream sig(sc.seed, StreamId::panel, static_cast<std::uint32_t>(p));
        panel.push_back(draw_hard_prior(sc.n, cfg.k, cfg.xi, sig));
    }
    std::vector<double> all(per * cfg.panel_size, 0.0);
    detail::parallel_for(all.size(), cfg.threads, [&](std::size_t i) {
        all[i] = run_trial(panel[i / per], static_cast<std::uint32_t>(i));
    });
    bool first = true;
    for (std::size_t p = 0; p < cfg.panel_size; ++p) {
        const std::vector<double> slice(all.begin() + static_cast<std::ptrdiff_t>(p * per),
                                        all.begin() + static_cast<std::ptrdiff_t>((p + 1) * per));
        const auto ms = mean_and_std_error(slice);
        if (first || ms.mean > est.mean_sq_error) {
            est.mean_sq_error = ms.mean;
            est.std_error = ms.std_error;
            est.per_trial = slice;
            first = false;
        }
    }
    est.trials = per;
    return est;
}

} // namespace gcslab
