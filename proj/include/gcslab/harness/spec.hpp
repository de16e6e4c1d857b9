#pragma once

// Experiment specification: one JSON document per experiment, unknown keys
// rejected, all problems reported together.

#include <gcslab/bounds.hpp>
#include <gcslab/error.hpp>
#include <gcslab/relu_builder.hpp>
#include <gcslab/sensing.hpp>

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace gcslab::harness {

enum class Kind { bounds_sweep, risk_curve, relu_verify, lipschitz_verify, packing_verify };

inline const char* kind_name(Kind k)
{
    switch (k) {
    case Kind::bounds_sweep: return "bounds_sweep";
    case Kind::risk_curve: return "risk_curve";
    case Kind::relu_verify: return "relu_verify";
    case Kind::lipschitz_verify: return "lipschitz_verify";
    case Kind::packing_verify: return "packing_verify";
    }
    return "?";
}

inline std::optional<Kind> parse_kind(const std::string& s)
{
    for (Kind k : {Kind::bounds_sweep, Kind::risk_curve, Kind::relu_verify, Kind::lipschitz_verify,
                   Kind::packing_verify}) {
        if (s == kind_name(k)) return k;
    }
    return std::nullopt;
}

class SpecError : public InvalidInput
{
public:
    explicit SpecError(std::vector<std::string> problems)
        : InvalidInput(join(problems)), problems_(std::move(problems))
    {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p)
    {
        std::string s = "invalid experiment spec:";
        for (const auto& x : p) s += "\n  " + x;
        return s;
    }

    std::vector<std::string> problems_;
};

struct Grid
{
    std::vector<std::size_t> n, n_over_k, k, m, k0, R;
    std::vector<double> alpha, L, r, x_max;
    std::vector<std::pair<std::size_t, std::size_t>> k0_n0;
    std::vector<std::string> regime;
};

struct ExperimentSpec
{
    Kind kind = Kind::bounds_sweep;
    Grid grid;
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string out = "out";

    // risk_curve
    std::optional<double> xi;              // absent: xi_choice at each m
    std::string decoder = "signed_supports";
    MatrixMode matrix_mode = MatrixMode::fixed;
    RiskMode mode = RiskMode::prior_averaged;
    std::size_t panel_size = 8;
    bool normalize_frobenius = false;      // rescale to ||A||_F^2 = C_A n
    bool trial_csv = false;

    // lipschitz_verify
    std::size_t pairs = 100000;
    std::size_t adversarial_pairs = 256;

    // packing_verify
    double V_cap = 1e5;

    BoundConstants constants;
};

inline std::optional<Regime> parse_regime(const std::string& s)
{
    if (s == "wide") return Wide{};
    if (s == "deep") return Deep{};
    if (s.rfind("mixed(", 0) == 0 && s.size() > 7 && s.back() == ')') {
        const std::string num = s.substr(6, s.size() - 7);
        if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
        Mixed m;
        m.depth = std::stoul(num);
        return m;
    }
    return std::nullopt;
}

namespace detail {

struct Reader
{
    std::vector<std::string> problems;

    void unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where)
    {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) problems.push_back(where + it.key() + ": unknown key");
        }
    }

    template <class T>
    void scalar(const nlohmann::json& obj, const char* key, T& out, const std::string& where)
    {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        bool ok = false;
        if constexpr (std::is_same_v<T, bool>) {
            ok = v.is_boolean();
        } else if constexpr (std::is_integral_v<T>) {
            ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
        } else if constexpr (std::is_floating_point_v<T>) {
            ok = v.is_number();
        } else {
            ok = v.is_string();
        }
        if (!ok) {
            problems.push_back(where + key + ": wrong type");
            return;
        }
        out = v.get<T>();
    }

    template <class T>
    void list(const nlohmann::json& obj, const char* key, std::vector<T>& out, const std::string& where)
    {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_array()) {
            problems.push_back(where + key + ": expected a list");
            return;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            T x{};
            nlohmann::json wrap = {{"v", v[i]}};
            const std::size_t before = problems.size();
            scalar(wrap, "v", x, where + key + "[" + std::to_string(i) + "]");
            if (problems.size() == before) out.push_back(x);
        }
        if (v.empty()) problems.push_back(where + key + ": empty list");
    }
};

} // namespace detail

inline ExperimentSpec parse_spec(const nlohmann::json& j)
{
    detail::Reader rd;
    ExperimentSpec s;
    if (!j.is_object()) throw SpecError({"spec: expected a JSON object"});
    rd.unknown_keys(j, {"kind", "grid", "trials", "seed", "threads", "out", "xi", "decoder", "matrix_mode", "mode",
                        "panel_size", "normalize_frobenius", "trial_csv", "pairs", "adversarial_pairs", "V_cap",
                        "constants"},
                    "");
    if (!j.contains("kind") || !j.at("kind").is_string()) {
        rd.problems.push_back("kind: required string");
    } else if (auto k = parse_kind(j.at("kind").get<std::string>())) {
        s.kind = *k;
    } else {
        rd.problems.push_back("kind: unknown experiment kind '" + j.at("kind").get<std::string>() + "'");
    }
    rd.scalar(j, "trials", s.trials, "");
    rd.scalar(j, "seed", s.seed, "");
    rd.scalar(j, "threads", s.threads, "");
    rd.scalar(j, "out", s.out, "");
    if (j.contains("xi")) {
        const auto& v = j.at("xi");
        if (v.is_number()) s.xi = v.get<double>();
        else if (!(v.is_string() && v.get<std::string>() == "choice")) rd.problems.push_back("xi: number or \"choice\"");
    }
    rd.scalar(j, "decoder", s.decoder, "");
    std::string mm = "fixed", mode = risk_mode_name(s.mode);
    rd.scalar(j, "matrix_mode", mm, "");
    rd.scalar(j, "mode", mode, "");
    rd.scalar(j, "panel_size", s.panel_size, "");
    rd.scalar(j, "normalize_frobenius", s.normalize_frobenius, "");
    rd.scalar(j, "trial_csv", s.trial_csv, "");
    rd.scalar(j, "pairs", s.pairs, "");
    rd.scalar(j, "adversarial_pairs", s.adversarial_pairs, "");
    rd.scalar(j, "V_cap", s.V_cap, "");
    if (mm == "fixed") s.matrix_mode = MatrixMode::fixed;
    else if (mm == "gaussian_iid") s.matrix_mode = MatrixMode::gaussian_iid;
    else rd.problems.push_back("matrix_mode: expected fixed or gaussian_iid");
    if (mode == "prior_averaged") s.mode = RiskMode::prior_averaged;
    else if (mode == "worst_case_over_sampled_signals") s.mode = RiskMode::worst_case_over_sampled_signals;
    else rd.problems.push_back("mode: expected prior_averaged or worst_case_over_sampled_signals");
    if (s.decoder != "signed_supports" && s.decoder != "supports_ls") {
        rd.problems.push_back("decoder: expected signed_supports or supports_ls");
    }

    if (j.contains("constants")) {
        const auto& c = j.at("constants");
        if (!c.is_object()) {
            rd.problems.push_back("constants: expected an object");
        } else {
            rd.unknown_keys(c, {"C0", "C1", "C_A", "C_upper", "c_valid"}, "constants.");
            rd.scalar(c, "C0", s.constants.C0, "constants.");
            rd.scalar(c, "C1", s.constants.C1, "constants.");
            rd.scalar(c, "C_A", s.constants.C_A, "constants.");
            rd.scalar(c, "C_upper", s.constants.C_upper, "constants.");
            rd.scalar(c, "c_valid", s.constants.c_valid, "constants.");
        }
    }

    if (!j.contains("grid") || !j.at("grid").is_object()) {
        rd.problems.push_back("grid: required object");
    } else {
        const auto& g = j.at("grid");
        rd.unknown_keys(g, {"n", "n_over_k", "k", "m", "k0", "R", "alpha", "L", "r", "x_max", "k0_n0", "regime"},
                        "grid.");
        rd.list(g, "n", s.grid.n, "grid.");
        rd.list(g, "n_over_k", s.grid.n_over_k, "grid.");
        rd.list(g, "k", s.grid.k, "grid.");
        rd.list(g, "m", s.grid.m, "grid.");
        rd.list(g, "k0", s.grid.k0, "grid.");
        rd.list(g, "R", s.grid.R, "grid.");
        rd.list(g, "alpha", s.grid.alpha, "grid.");
        rd.list(g, "L", s.grid.L, "grid.");
        rd.list(g, "r", s.grid.r, "grid.");
        rd.list(g, "x_max", s.grid.x_max, "grid.");
        rd.list(g, "regime", s.grid.regime, "grid.");
        if (g.contains("k0_n0")) {
            const auto& v = g.at("k0_n0");
            bool ok = v.is_array() && !v.empty();
            if (ok) {
                for (const auto& p : v) {
                    if (!(p.is_array() && p.size() == 2 && p[0].is_number_integer() && p[1].is_number_integer() &&
                          p[0].get<long long>() > 0 && p[1].get<long long>() > 0)) {
                        ok = false;
                        break;
                    }
                    s.grid.k0_n0.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
                }
            }
            if (!ok) rd.problems.push_back("grid.k0_n0: expected a non-empty list of [k0, n0] pairs");
        }
        for (const auto& reg : s.grid.regime) {
            if (!parse_regime(reg)) rd.problems.push_back("grid.regime: unknown regime '" + reg + "'");
        }
    }
    if (!rd.problems.empty()) throw SpecError(rd.problems);
    return s;
}

// Field-level preconditions. Cell-level ones (e.g. n a multiple of k) are
// reported per cell as skipped.
inline void validate_spec(const ExperimentSpec& s)
{
    std::vector<std::string> p;
    const auto& g = s.grid;
    auto need = [&](bool cond, const std::string& msg) {
        if (!cond) p.push_back(msg);
    };
    auto positive = [&](const std::vector<double>& v, const char* name) {
        for (double x : v) need(std::isfinite(x) && x > 0, std::string("grid.") + name + ": values must be positive");
    };
    auto nonzero = [&](const std::vector<std::size_t>& v, const char* name) {
        for (auto x : v) need(x > 0, std::string("grid.") + name + ": values must be positive");
    };
    positive(g.alpha, "alpha");
    positive(g.L, "L");
    positive(g.r, "r");
    positive(g.x_max, "x_max");
    nonzero(g.n, "n");
    nonzero(g.n_over_k, "n_over_k");
    nonzero(g.k, "k");
    nonzero(g.m, "m");
    need(!(g.n.size() && g.n_over_k.size()), "grid: give either n or n_over_k, not both");
    need(s.trials >= 1, "trials: must be >= 1");
    need(s.threads >= 1, "threads: must be >= 1");
    need(s.panel_size >= 1, "panel_size: must be >= 1");
    need(!s.xi || (std::isfinite(*s.xi) && *s.xi > 0), "xi: must be positive");
    need(s.V_cap >= 1, "V_cap: must be >= 1");
    try {
        s.constants.validate();
    } catch (const InvalidInput& e) {
        p.push_back(std::string("constants: ") + e.what());
    }
    const bool has_n = !g.n.empty() || !g.n_over_k.empty();
    switch (s.kind) {
    case Kind::bounds_sweep:
        need(has_n && !g.k.empty(), "grid: bounds_sweep needs k and n (or n_over_k)");
        break;
    case Kind::risk_curve:
        need(has_n && !g.k.empty(), "grid: risk_curve needs k and n (or n_over_k)");
        need(!g.m.empty(), "grid.m: risk_curve needs measurement counts");
        need(!g.alpha.empty(), "grid.alpha: risk_curve needs noise levels");
        break;
    case Kind::relu_verify:
        need((has_n && !g.k.empty()) || !g.R.empty() || !g.k0_n0.empty(),
             "grid: relu_verify needs (n, k), R or k0_n0");
        for (auto R : g.R) need(is_power_of_two(R), "grid.R: values must be powers of two");
        break;
    case Kind::lipschitz_verify:
        need(has_n && !g.k.empty(), "grid: lipschitz_verify needs k and n (or n_over_k)");
        need(s.pairs >= 1, "pairs: must be >= 1");
        break;
    case Kind::packing_verify:
        need(!g.k.empty(), "grid.k: packing_verify needs k");
        need(g.n.empty(), "grid.n: packing_verify takes n_over_k (or none for the full sweep)");
        break;
    }
    if (!p.empty()) throw SpecError(p);
}

// Canonical form: every setting that affects results, defaults filled in.
// threads and out are excluded (they do not change output contents).
inline nlohmann::json canonical_json(const ExperimentSpec& s)
{
    using nlohmann::json;
    json g = json::object();
    auto put = [&](const char* key, const auto& v) {
        if (!v.empty()) g[key] = v;
    };
    put("n", s.grid.n);
    put("n_over_k", s.grid.n_over_k);
    put("k", s.grid.k);
    put("m", s.grid.m);
    put("k0", s.grid.k0);
    put("R", s.grid.R);
    put("alpha", s.grid.alpha);
    put("L", s.grid.L);
    put("r", s.grid.r);
    put("x_max", s.grid.x_max);
    put("regime", s.grid.regime);
    if (!s.grid.k0_n0.empty()) {
        json pairs = json::array();
        for (const auto& [a, b] : s.grid.k0_n0) pairs.push_back({a, b});
        g["k0_n0"] = pairs;
    }
    json j = {{"kind", kind_name(s.kind)},
              {"grid", g},
              {"trials", s.trials},
              {"seed", s.seed},
              {"decoder", s.decoder},
              {"matrix_mode", s.matrix_mode == MatrixMode::fixed ? "fixed" : "gaussian_iid"},
              {"mode", risk_mode_name(s.mode)},
              {"panel_size", s.panel_size},
              {"normalize_frobenius", s.normalize_frobenius},
              {"trial_csv", s.trial_csv},
              {"pairs", s.pairs},
              {"adversarial_pairs", s.adversarial_pairs},
              {"V_cap", s.V_cap},
              {"constants",
               {{"C0", s.constants.C0},
                {"C1", s.constants.C1},
                {"C_A", s.constants.C_A},
                {"C_upper", s.constants.C_upper},
                {"c_valid", s.constants.c_valid}}}};
    if (s.xi) j["xi"] = *s.xi;
    else j["xi"] = "choice";
    return j;
}

} // namespace gcslab::harness
