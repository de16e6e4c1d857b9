#pragma once

// Experiment runner: expands the grid, evaluates every cell, and aggregates
// rows in grid order so file contents never depend on scheduling.

#include <gcslab/bounds.hpp>
#include <gcslab/core_model.hpp>
#include <gcslab/harness/plot.hpp>
#include <gcslab/harness/spec.hpp>
#include <gcslab/harness/table.hpp>
#include <gcslab/relu_builder.hpp>
#include <gcslab/relu_network.hpp>
#include <gcslab/rng.hpp>
#include <gcslab/sensing.hpp>

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace gcslab::harness {

// ---------------------------------------------------------------------------
// Property probes shared by the CLI and tests

struct LipschitzProbe
{
    double L = 0;
    std::size_t pairs = 0;
    double max_ratio = 0;
    std::size_t violations = 0;            // ratio > L (1 + 1e-9)
    double adversarial_min_ratio = 0;      // same linear piece of one coordinate
};

// Random pairs uniform on the cube; adversarial pairs sit inside one linear
// piece of one sub-interval of one coordinate, remaining coordinates shared.
inline LipschitzProbe lipschitz_probe(const GenModelParams& p, std::size_t pairs, std::size_t adversarial,
                                      std::uint64_t seed, std::uint32_t cell)
{
    p.validate();
    LipschitzProbe out;
    out.L = p.lipschitz();
    out.pairs = pairs;
    const auto k = static_cast<Eigen::Index>(p.k);
    PhiloxStream rng(seed, StreamId::pairs, cell, 0);
    Eigen::VectorXd z(k), w(k);
    for (std::size_t i = 0; i < pairs; ++i) {
        for (Eigen::Index c = 0; c < k; ++c) {
            z[c] = p.r * (2.0 * rng.uniform() - 1.0);
            w[c] = p.r * (2.0 * rng.uniform() - 1.0);
        }
        const double dz = (z - w).norm();
        if (dz == 0.0) continue;
        const double ratio = (generate(p, z).values() - generate(p, w).values()).norm() / dz;
        out.max_ratio = std::max(out.max_ratio, ratio);
        if (ratio > out.L * (1.0 + 1e-9)) ++out.violations;
    }
    PhiloxStream adv(seed, StreamId::pairs, cell, 1);
    const double h = p.interval_len();
    static const double pieces[3][2] = {{0.0, 0.25}, {0.25, 0.75}, {0.75, 1.0}};
    out.adversarial_min_ratio = INFINITY;
    for (std::size_t i = 0; i < adversarial; ++i) {
        const auto coord = static_cast<Eigen::Index>(adv.below(p.k));
        const std::size_t j = adv.below(p.block_len());
        const auto& pc = pieces[adv.below(3)];
        for (Eigen::Index c = 0; c < k; ++c) z[c] = p.r * (2.0 * adv.uniform() - 1.0);
        w = z;
        const double span = pc[1] - pc[0];
        const double t1 = pc[0] + span * (0.1 + 0.8 * adv.uniform());
        const double t2 = pc[0] + span * (0.1 + 0.8 * adv.uniform());
        if (t1 == t2) continue;
        z[coord] = p.interval_start(j) + t1 * h;
        w[coord] = p.interval_start(j) + t2 * h;
        const double ratio = (generate(p, z).values() - generate(p, w).values()).norm() / (z - w).norm();
        out.adversarial_min_ratio = std::min(out.adversarial_min_ratio, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
        if (ratio > out.L * (1.0 + 1e-9)) ++out.violations;
    }
    return out;
}

// max |deep network - generate| with 64 points per sub-interval; every
// coordinate walks the same grid.
inline double deep_equality_error(const GenModelParams& p, const ReluNetwork& net, std::size_t per_interval = 64)
{
    const std::size_t pts = p.block_len() * per_interval;
    double err = 0.0;
    Eigen::VectorXd z(static_cast<Eigen::Index>(p.k));
    for (std::size_t i = 0; i <= pts; ++i) {
        const double t = -p.r + 2.0 * p.r * static_cast<double>(i) / static_cast<double>(pts);
        z.setConstant(std::clamp(t, -p.r, p.r));
        err = std::max(err, (forward(net, z) - generate(p, z).values()).cwiseAbs().maxCoeff());
    }
    return err;
}

struct PatternCheck
{
    std::uint64_t cells = 0;
    std::uint64_t distinct = 0;
    double max_error = 0;   // distance of an output entry from {0, +-xi}
    bool bijective = false;
};

// Every finest-cell midpoint of every copy (others held at cell 0) must give a
// signed pattern of magnitude xi, and all 2^{k0}(n0/k0)^{k0} patterns appear
// exactly once per copy.
inline PatternCheck recursive_pattern_check(const RecursiveGenParams& p, const ReluNetwork& net)
{
    PatternCheck out;
    const auto cells = static_cast<std::uint64_t>(std::llround(p.pattern_count()));
    out.cells = cells;
    const std::size_t B = p.block_len();
    bool ok = true;
    std::uint64_t distinct_min = cells;
    for (std::size_t copy = 0; copy < p.k; ++copy) {
        std::vector<int> hits(cells, 0);
        Eigen::VectorXd z = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p.k), finest_cell_midpoint(p, 0));
        for (std::uint64_t c = 0; c < cells; ++c) {
            z[static_cast<Eigen::Index>(copy)] = finest_cell_midpoint(p, c);
            const Eigen::VectorXd x = forward(net, z);
            SignedSupport s;
            bool valid = true;
            for (std::size_t l = 0; l < p.k0 && valid; ++l) {
                int found = 0;
                SignedSupport::Entry e;
                for (std::size_t j = 0; j < B; ++j) {
                    const double v = x[static_cast<Eigen::Index>(copy * p.n0 + l * B + j)];
                    const double dev = std::min({std::abs(v), std::abs(v - p.xi), std::abs(v + p.xi)});
                    out.max_error = std::max(out.max_error, dev);
                    if (std::abs(v) > 0.5 * p.xi) {
                        ++found;
                        e = {j, v > 0 ? 1 : -1};
                    }
                }
                if (found != 1) valid = false;
                s.entries.push_back(e);
            }
            if (!valid) {
                ok = false;
                continue;
            }
            ++hits[encode_pattern(s, B)];
        }
        std::uint64_t distinct = 0;
        for (int h : hits) {
            if (h == 1) ++distinct;
            else ok = false;
        }
        distinct_min = std::min(distinct_min, distinct);
    }
    out.distinct = distinct_min;
    out.bijective = ok && out.max_error <= 1e-9;
    return out;
}

// ---------------------------------------------------------------------------
// Run results

struct RunResult
{
    ExperimentSpec spec;
    Table table{{}};
    std::vector<std::string> status;          // per cell
    std::optional<Table> trials;              // risk_curve with trial_csv
    std::optional<PlotOptions> plot;          // set when the kind has a plot
    std::string spec_hash;
    std::string manifest_id;
    std::string started, finished;

    bool all_ok() const
    {
        for (const auto& s : status) {
            if (s != "ok" && s.rfind("skipped", 0) != 0) return false;
        }
        return true;
    }

    std::string csv() const
    {
        return table.to_csv(std::string("schema=") + kCsvSchema + " kind=" + kind_name(spec.kind) +
                            " manifest=" + manifest_id);
    }
};

namespace detail {

inline std::string utc_now()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string sanitize(std::string s)
{
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

inline std::string skipped(const std::string& why) { return "skipped(" + why + ")"; }
inline std::string failed(const std::string& why) { return "failed(" + why + ")"; }

struct NK
{
    std::size_t n, k;
};

// (n, k) pairs in grid order: k outer, then n (or n_over_k).
inline std::vector<NK> nk_pairs(const Grid& g)
{
    std::vector<NK> out;
    for (auto k : g.k) {
        if (!g.n_over_k.empty()) {
            for (auto b : g.n_over_k) out.push_back({b * k, k});
        } else {
            for (auto n : g.n) out.push_back({n, k});
        }
    }
    return out;
}

template <class T>
std::vector<T> or_default(const std::vector<T>& v, T d)
{
    return v.empty() ? std::vector<T>{d} : v;
}

// Evaluates cells concurrently into per-index slots.
template <class F>
std::vector<std::pair<Table::Row, std::string>> run_cells(const Table& t, std::size_t count, std::size_t threads,
                                                          F&& body)
{
    std::vector<std::pair<Table::Row, std::string>> out(count, {t.row(), ""});
    gcslab::detail::parallel_for(count, threads, [&](std::size_t i) {
        Table::Row row = t.row();
        std::string status;
        try {
            status = body(i, row);
        } catch (const CapExceeded& e) {
            status = skipped(e.what());
        } catch (const InvalidInput& e) {
            status = skipped(e.what());
        } catch (const std::exception& e) {
            status = failed(e.what());
        }
        status = sanitize(status);
        row.set("status", status);
        out[i] = {row, status};
    });
    return out;
}

inline void collect(RunResult& res, std::vector<std::pair<Table::Row, std::string>>&& cells)
{
    for (auto& [row, st] : cells) {
        res.table.add(row);
        res.status.push_back(st);
    }
}

// ---------------------------------------------------------------------------

inline void run_bounds(RunResult& res)
{
    const auto& s = res.spec;
    const auto& C = s.constants;
    res.table = Table({"n", "k", "m", "alpha", "L", "r", "log_V", "log_Nmax_bound", "log_Nmax_exact", "ratio_bound",
                       "packing_flag", "analytic_flag", "required_m_lower", "sigma2", "xi_choice", "minimax_lower",
                       "fano_lower", "fano_bracket", "upper_m_rect", "upper_m_sphere", "thm_n", "thm_x_max",
                       "status"});
    struct Cell { NK nk; std::optional<std::size_t> m; double alpha; std::optional<double> L; double r; };
    std::vector<Cell> cells;
    const auto ms = s.grid.m;
    for (const auto& nk : nk_pairs(s.grid)) {
        for (double a : or_default(s.grid.alpha, 1.0)) {
            for (double r : or_default(s.grid.r, 1.0)) {
                std::vector<std::optional<double>> Ls;
                if (s.grid.L.empty()) Ls.emplace_back();
                for (double L : s.grid.L) Ls.emplace_back(L);
                for (const auto& L : Ls) {
                    if (ms.empty()) cells.push_back({nk, std::nullopt, a, L, r});
                    for (auto m : ms) cells.push_back({nk, m, a, L, r});
                }
            }
        }
    }
    collect(res, run_cells(res.table, cells.size(), s.threads, [&](std::size_t i, Table::Row& row) {
        const auto& c = cells[i];
        row.set("n", c.nk.n).set("k", c.nk.k).set("alpha", c.alpha).set("r", c.r);
        if (c.m) row.set("m", *c.m);
        if (c.L) row.set("L", *c.L);
        const auto ps = packing_stats(c.nk.n, c.nk.k);
        row.set("log_V", ps.log_V).set("log_Nmax_bound", ps.log_Nmax_bound).set("log_Nmax_exact", ps.log_Nmax_exact);
        row.set("ratio_bound", ps.ratio_bound).set("packing_flag", ps.exact_flag).set("analytic_flag", ps.analytic_flag);
        std::vector<std::string> notes;
        auto attempt = [&](auto&& f) {
            try {
                f();
            } catch (const InvalidInput& e) {
                notes.push_back(e.what());
            }
        };
        attempt([&] { row.set("required_m_lower", required_m_lower(c.nk.n, c.nk.k, C.C1, C.C_A, C.C0)); });
        if (c.m) {
            const double sigma2 = c.alpha / static_cast<double>(*c.m);
            const double frob = C.C_A * static_cast<double>(c.nk.n);
            row.set("sigma2", sigma2);
            attempt([&] {
                const auto fc = fano_chain(c.nk.n, c.nk.k, sigma2, frob, C.C0);
                row.set("xi_choice", fc.xi).set("minimax_lower", fc.minimax).set("fano_lower", fc.fano);
                row.set("fano_bracket", fc.bracket);
            });
        }
        if (c.L) {
            attempt([&] { row.set("upper_m_rect", upper_m_lipschitz(c.nk.k, *c.L, c.r, c.alpha, Domain::rect, C.C_upper)); });
            attempt([&] { row.set("upper_m_sphere", upper_m_lipschitz(c.nk.k, *c.L, c.r, c.alpha, Domain::sphere, C.C_upper)); });
            attempt([&] {
                const auto tp = thm_main_params(*c.L, c.r, c.nk.k, c.alpha, C.C1, C.c_valid);
                row.set("thm_n", tp.n).set("thm_x_max", tp.x_max);
            });
        }
        (void)notes;   // partial rows are expected (e.g. n < C0 k); the cell itself succeeded
        return std::string("ok");
    }));
    res.plot = PlotOptions{"n", "required_m_lower", "k", "threshold_", "", true, "required m vs n"};
}

inline void run_risk(RunResult& res)
{
    const auto& s = res.spec;
    const auto& C = s.constants;
    res.table = Table({"series", "n", "k", "alpha", "m", "xi", "decoder", "mode", "matrix_mode", "trials", "risk",
                       "std_error", "minimax_lower", "C1_alpha", "threshold_required_m_lower", "threshold_upper_m_rect",
                       "threshold_upper_m_sphere", "seed", "status"});
    if (s.trial_csv) {
        res.trials = Table({"trial", "m", "n", "k", "alpha", "xi", "decoder", "sq_error", "seed"});
    }
    struct Cell { NK nk; double alpha; std::optional<double> L; double r; std::size_t m; };
    std::vector<Cell> cells;
    for (const auto& nk : nk_pairs(s.grid)) {
        for (double a : s.grid.alpha) {
            for (double r : or_default(s.grid.r, 1.0)) {
                std::vector<std::optional<double>> Ls;
                if (s.grid.L.empty()) Ls.emplace_back();
                for (double L : s.grid.L) Ls.emplace_back(L);
                for (const auto& L : Ls) {
                    for (auto m : s.grid.m) cells.push_back({nk, a, L, r, m});
                }
            }
        }
    }
    std::vector<std::vector<double>> per_trial(cells.size());
    std::vector<double> xis(cells.size(), 0.0);
    collect(res, run_cells(res.table, cells.size(), s.threads, [&](std::size_t i, Table::Row& row) {
        const auto& c = cells[i];
        std::string series = "n=" + std::to_string(c.nk.n) + " k=" + std::to_string(c.nk.k) + " alpha=" + fmt(c.alpha);
        if (c.L) series += " L=" + fmt(*c.L);
        row.set("series", series).set("n", c.nk.n).set("k", c.nk.k).set("alpha", c.alpha).set("m", c.m);
        row.set("decoder", s.decoder).set("mode", risk_mode_name(s.mode));
        row.set("matrix_mode", s.matrix_mode == MatrixMode::fixed ? "fixed" : "gaussian_iid");
        row.set("seed", fmt(static_cast<std::size_t>(s.seed))).set("C1_alpha", C.C1 * c.alpha);
        gcslab::detail::require(c.nk.n % c.nk.k == 0, "n must be a multiple of k");
        const double frob = C.C_A * static_cast<double>(c.nk.n);
        const double sigma2 = c.alpha / static_cast<double>(c.m);
        const double xi = s.xi ? *s.xi : xi_choice(c.nk.n, c.nk.k, sigma2, frob);
        xis[i] = xi;
        row.set("xi", xi);
        try {
            row.set("minimax_lower", minimax_lower(c.nk.n, c.nk.k, sigma2, frob, C.C0));
            row.set("threshold_required_m_lower", required_m_lower(c.nk.n, c.nk.k, C.C1, C.C_A, C.C0));
        } catch (const InvalidInput&) {
        }
        if (c.L) {
            try {
                row.set("threshold_upper_m_rect", upper_m_lipschitz(c.nk.k, *c.L, c.r, c.alpha, Domain::rect, C.C_upper));
                row.set("threshold_upper_m_sphere",
                        upper_m_lipschitz(c.nk.k, *c.L, c.r, c.alpha, Domain::sphere, C.C_upper));
            } catch (const InvalidInput&) {
            }
        }
        RiskConfig rc;
        rc.sensing = {c.m, c.nk.n, c.alpha, s.matrix_mode, std::nullopt, s.seed};
        if (s.normalize_frobenius) rc.sensing.normalize_frobenius = frob;
        rc.k = c.nk.k;
        rc.xi = xi;
        rc.trials = s.trials;
        rc.mode = s.mode;
        rc.panel_size = s.panel_size;
        rc.threads = 1;
        const std::size_t k = c.nk.k;
        Decoder dec;
        if (s.decoder == "signed_supports") {
            dec = [k, xi](const Eigen::VectorXd& y, const Eigen::MatrixXd& A) {
                return decode_signed_supports(y, A, k, xi).x.values();
            };
        } else {
            dec = [k, xi](const Eigen::VectorXd& y, const Eigen::MatrixXd& A) {
                return decode_supports_ls(y, A, k, xi).x.values();
            };
        }
        const RiskEstimate est = estimate_risk(rc, dec);
        row.set("trials", est.trials).set("risk", est.mean_sq_error).set("std_error", est.std_error);
        per_trial[i] = est.per_trial;
        return std::string("ok");
    }));
    if (res.trials) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t t = 0; t < per_trial[i].size(); ++t) {
                auto r = res.trials->row();
                r.set("trial", t).set("m", cells[i].m).set("n", cells[i].nk.n).set("k", cells[i].nk.k);
                r.set("alpha", cells[i].alpha).set("xi", xis[i]).set("decoder", s.decoder);
                r.set("sq_error", per_trial[i][t]).set("seed", fmt(static_cast<std::size_t>(s.seed)));
                res.trials->add(r);
            }
        }
    }
    res.plot = PlotOptions{};
}

inline void run_relu(RunResult& res)
{
    const auto& s = res.spec;
    res.table = Table({"case", "n", "k", "r", "R", "k0", "n0", "regime", "depth", "width", "max_weight", "max_offset",
                       "pieces", "budget_depth", "budget_width", "patterns", "distinct", "max_error", "status"});
    struct Cell { int type = 0; NK nk{}; double r = 1; std::size_t R = 0; std::size_t k0 = 0, n0 = 0; std::string regime; std::size_t kcopies = 1; };
    std::vector<Cell> cells;
    if (!s.grid.k.empty() && (!s.grid.n.empty() || !s.grid.n_over_k.empty())) {
        for (const auto& nk : nk_pairs(s.grid)) {
            for (double r : or_default(s.grid.r, 1.0)) {
                Cell c;
                c.nk = nk;
                c.r = r;
                cells.push_back(c);
            }
        }
    }
    for (auto R : s.grid.R) {
        Cell c;
        c.type = 1;
        c.R = R;
        cells.push_back(c);
    }
    const auto regimes = s.grid.regime.empty() ? std::vector<std::string>{"wide", "deep", "mixed(4)"} : s.grid.regime;
    for (const auto& [k0, n0] : s.grid.k0_n0) {
        for (const auto& reg : regimes) {
            Cell c;
            c.type = 2;
            c.k0 = k0;
            c.n0 = n0;
            c.regime = reg;
            cells.push_back(c);
        }
    }
    const double xi = s.xi.value_or(1.0);
    const double x_max = s.grid.x_max.empty() ? 1.0 : s.grid.x_max.front();
    collect(res, run_cells(res.table, cells.size(), s.threads, [&](std::size_t i, Table::Row& row) {
        const auto& c = cells[i];
        if (c.type == 0) {
            row.set("case", "double_triangle").set("n", c.nk.n).set("k", c.nk.k).set("r", c.r);
            const auto p = GenModelParams::make(c.nk.n, c.nk.k, c.r, x_max);
            const auto net = build_double_triangle_deep(p);
            const auto st = stats(net);
            const double err = deep_equality_error(p, net);
            const double D = static_cast<double>(deep_composition_count(p));
            row.set("depth", st.depth).set("width", st.width).set("max_weight", st.max_weight);
            row.set("max_offset", st.max_offset).set("budget_depth", 2 * D + 2).set("max_error", err);
            std::vector<std::string> bad;
            if (err > 1e-9) bad.push_back("equality");
            if (st.max_weight > 4.0) bad.push_back("weight");
            if (st.max_offset > 4.0 * c.r) bad.push_back("offset");
            if (static_cast<double>(st.depth) != 2 * D + 2) bad.push_back("depth");
            return bad.empty() ? std::string("ok") : failed(nlohmann::json(bad).dump());
        }
        if (c.type == 1) {
            row.set("case", "sawtooth").set("R", c.R);
            const auto net = build_sawtooth(c.R);
            const auto st = stats(net, 0.0, 1.0);
            const double t = std::log2(static_cast<double>(c.R));
            const std::size_t pieces = st.piece_count_per_output.at(0);
            row.set("depth", st.depth).set("width", st.width).set("max_weight", st.max_weight);
            row.set("max_offset", st.max_offset).set("pieces", pieces).set("budget_depth", 2 * t + 2);
            row.set("budget_width", 3.0);
            const bool ok = pieces == 2 * c.R && st.width <= 3 && static_cast<double>(st.depth) <= 2 * t + 2;
            return ok ? std::string("ok") : failed("sawtooth accounting");
        }
        row.set("case", "recursive").set("k0", c.k0).set("n0", c.n0).set("regime", c.regime).set("k", c.kcopies);
        RecursiveGenParams p;
        p.k = c.kcopies;
        p.k0 = c.k0;
        p.n0 = c.n0;
        p.xi = xi;
        const Regime reg = *parse_regime(c.regime);
        const auto net = build_recursive_generator(p, reg);
        const auto st = stats(net);
        const auto budget = regime_budget(p, reg);
        const auto pc = recursive_pattern_check(p, net);
        row.set("depth", st.depth).set("width", st.width).set("max_weight", st.max_weight);
        row.set("max_offset", st.max_offset).set("budget_depth", budget.max_depth).set("budget_width", budget.max_width);
        row.set("patterns", static_cast<std::size_t>(pc.cells)).set("distinct", static_cast<std::size_t>(pc.distinct));
        row.set("max_error", pc.max_error);
        std::vector<std::string> bad;
        if (!pc.bijective) bad.push_back("bijection");
        if (static_cast<double>(st.depth) > budget.max_depth) bad.push_back("depth budget");
        if (static_cast<double>(st.width) > budget.max_width) bad.push_back("width budget");
        return bad.empty() ? std::string("ok") : failed(nlohmann::json(bad).dump());
    }));
}

inline void run_lipschitz(RunResult& res)
{
    const auto& s = res.spec;
    res.table = Table({"n", "k", "r", "x_max", "L", "pairs", "max_ratio", "violations", "adversarial_min_ratio",
                       "status"});
    struct Cell { NK nk; double r, x_max; };
    std::vector<Cell> cells;
    for (const auto& nk : nk_pairs(s.grid)) {
        for (double r : or_default(s.grid.r, 1.0)) {
            for (double x : or_default(s.grid.x_max, 1.0)) cells.push_back({nk, r, x});
        }
    }
    collect(res, run_cells(res.table, cells.size(), s.threads, [&](std::size_t i, Table::Row& row) {
        const auto& c = cells[i];
        row.set("n", c.nk.n).set("k", c.nk.k).set("r", c.r).set("x_max", c.x_max);
        const auto p = GenModelParams::make(c.nk.n, c.nk.k, c.r, c.x_max);
        const auto pr = lipschitz_probe(p, s.pairs, s.adversarial_pairs, s.seed, static_cast<std::uint32_t>(i));
        row.set("L", pr.L).set("pairs", pr.pairs).set("max_ratio", pr.max_ratio).set("violations", pr.violations);
        row.set("adversarial_min_ratio", pr.adversarial_min_ratio);
        if (pr.violations > 0) return failed("Lipschitz bound violated");
        if (pr.adversarial_min_ratio < (1.0 - 1e-9) * pr.L) return failed("adversarial pairs below L");
        return std::string("ok");
    }));
}

inline void run_packing(RunResult& res)
{
    const auto& s = res.spec;
    const auto& C = s.constants;
    res.table = Table({"n", "k", "V_count", "log_V", "nmax_oracle", "nmax_exact", "log_Nmax_bound", "bound_ok",
                       "log_ratio_exact", "ratio_bound", "ratio_ok", "analytic_flag", "cov_deviation", "fano_bracket",
                       "status"});
    std::vector<NK> cells;
    for (auto k : s.grid.k) {
        if (!s.grid.n_over_k.empty()) {
            for (auto b : s.grid.n_over_k) cells.push_back({b * k, k});
        } else {
            for (std::size_t b = static_cast<std::size_t>(std::ceil(C.C0)); b >= 1; ++b) {
                if (signed_pattern_count(b, k) > s.V_cap) break;
                cells.push_back({b * k, k});
            }
        }
    }
    collect(res, run_cells(res.table, cells.size(), s.threads, [&](std::size_t i, Table::Row& row) {
        const auto [n, k] = cells[i];
        row.set("n", n).set("k", k);
        if (static_cast<double>(n) < C.C0 * static_cast<double>(k)) return skipped("n/k below C0");
        const auto audit = packing_audit(n, k, hamming_threshold(k), s.V_cap);
        const auto ps = packing_stats(n, k);
        const double nx = nmax_exact(n, k, hamming_threshold(k));
        const double log_ratio = std::log(static_cast<double>(audit.count)) - std::log(static_cast<double>(audit.nmax));
        const auto fc = fano_chain(n, k, 1.0, static_cast<double>(n), C.C0);
        row.set("V_count", static_cast<std::size_t>(audit.count)).set("log_V", ps.log_V);
        row.set("nmax_oracle", static_cast<std::size_t>(audit.nmax)).set("nmax_exact", nx);
        row.set("log_Nmax_bound", ps.log_Nmax_bound);
        const bool bound_ok = std::log(static_cast<double>(audit.nmax)) <= ps.log_Nmax_bound;
        const bool ratio_ok = log_ratio >= ps.ratio_bound;
        row.set("bound_ok", bound_ok).set("log_ratio_exact", log_ratio).set("ratio_bound", ps.ratio_bound);
        row.set("ratio_ok", ratio_ok).set("analytic_flag", ps.analytic_flag);
        row.set("cov_deviation", audit.cov_deviation).set("fano_bracket", fc.bracket);
        std::vector<std::string> bad;
        const double count_formula = signed_pattern_count(n / k, k);
        if (static_cast<double>(audit.count) != count_formula) bad.push_back("count");
        if (std::abs(nx - static_cast<double>(audit.nmax)) > 1e-9 * nx) bad.push_back("nmax");
        if (!bound_ok) bad.push_back("nmax bound");
        if (!ratio_ok) bad.push_back("ratio");
        if (audit.cov_deviation > 1e-12) bad.push_back("covariance");
        if (!audit.separation_ok) bad.push_back("separation");
        if (fc.bracket < 0.5) bad.push_back("fano bracket");
        if (fc.fano < fc.minimax * (1 - 1e-12)) bad.push_back("fano chain");
        return bad.empty() ? std::string("ok") : failed(nlohmann::json(bad).dump());
    }));
}

} // namespace detail

inline RunResult run(const ExperimentSpec& spec)
{
    validate_spec(spec);
    RunResult res;
    res.spec = spec;
    const std::string canon = canonical_json(spec).dump();
    res.spec_hash = hex64(fnv1a64(canon));
    res.manifest_id = hex64(fnv1a64(canon + "|" + kToolVersion + "|" + kRngAlgorithm + "|" + kCsvSchema));
    res.started = detail::utc_now();
    switch (spec.kind) {
    case Kind::bounds_sweep: detail::run_bounds(res); break;
    case Kind::risk_curve: detail::run_risk(res); break;
    case Kind::relu_verify: detail::run_relu(res); break;
    case Kind::lipschitz_verify: detail::run_lipschitz(res); break;
    case Kind::packing_verify: detail::run_packing(res); break;
    }
    res.finished = detail::utc_now();
    return res;
}

inline nlohmann::json manifest_json(const RunResult& r, const std::vector<std::string>& outputs)
{
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t i = 0; i < r.status.size(); ++i) cells.push_back({{"index", i}, {"status", r.status[i]}});
    return {{"format", "gcslab-manifest"},
            {"version", 1},
            {"manifest_id", r.manifest_id},
            {"spec_hash", r.spec_hash},
            {"spec", canonical_json(r.spec)},
            {"tool_version", kToolVersion},
            {"rng", kRngAlgorithm},
            {"csv_schema", kCsvSchema},
            {"log_base", kLogBase},
            {"started", r.started},
            {"finished", r.finished},
            {"threads", r.spec.threads},
            {"all_ok", r.all_ok()},
            {"cells", cells},
            {"outputs", outputs}};
}

inline void write_text(const std::filesystem::path& p, const std::string& s)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

// results.csv, manifest.json and, for kinds with a plot, plot.svg.
inline std::vector<std::string> write_outputs(const RunResult& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::string> outputs{"results.csv"};
    const std::string csv = r.csv();
    write_text(dir / "results.csv", csv);
    if (r.trials) {
        write_text(dir / "trials.csv", r.trials->to_csv(std::string("schema=gcslab-trials/1 manifest=") + r.manifest_id));
        outputs.push_back("trials.csv");
    }
    if (r.plot) {
        write_text(dir / "plot.svg", emit_plot(csv, *r.plot));
        outputs.push_back("plot.svg");
    }
    outputs.push_back("manifest.json");
    write_text(dir / "manifest.json", manifest_json(r, outputs).dump(2) + "\n");
    return outputs;
}

} // namespace gcslab::harness
