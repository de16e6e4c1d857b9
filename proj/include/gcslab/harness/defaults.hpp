#pragma once

// Built-in experiments, used by the CLI when no --spec is given.

#include <gcslab/harness/spec.hpp>

#include <string>

namespace gcslab::harness {

inline nlohmann::json default_spec_json(Kind kind)
{
    using nlohmann::json;
    switch (kind) {
    case Kind::bounds_sweep:
        return {{"kind", "bounds_sweep"},
                {"grid", {{"n_over_k", {4, 8, 16}}, {"k", {1, 2, 4}}, {"alpha", {1.0}}, {"r", {1.0}}, {"L", {10.0}}}}};
    case Kind::risk_curve:
        return {{"kind", "risk_curve"},
                {"grid", {{"n", {16}}, {"k", {2}}, {"alpha", {1.0}},
                          {"m", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16}}}},
                {"trials", 500}};
    case Kind::relu_verify:
        return {{"kind", "relu_verify"},
                {"grid", {{"n", {8, 32, 64}}, {"k", {2, 4}}, {"r", {1.0, 2.0}}, {"R", {1, 2, 4, 8, 16}},
                          {"k0_n0", {{1, 4}, {2, 4}, {2, 6}, {3, 6}}}, {"regime", {"wide", "deep", "mixed(4)"}}}}};
    case Kind::lipschitz_verify:
        return {{"kind", "lipschitz_verify"},
                {"grid", {{"n_over_k", {2, 4, 8, 16}}, {"k", {1, 2, 4}}, {"r", {0.5, 2.0}}, {"x_max", {1.0}}}},
                {"pairs", 100000}};
    case Kind::packing_verify:
        return {{"kind", "packing_verify"}, {"grid", {{"k", {1, 2, 3, 4, 5}}}}, {"V_cap", 1e5}};
    }
    return {};
}

inline ExperimentSpec default_spec(Kind kind) { return parse_spec(default_spec_json(kind)); }

} // namespace gcslab::harness
