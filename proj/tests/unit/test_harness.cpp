#include <gcslab/harness/defaults.hpp>
#include <gcslab/harness/plot.hpp>
#include <gcslab/harness/run.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace gcslab;
using namespace gcslab::harness;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& s, const std::string& needle)
{
    std::size_t c = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++c;
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::string> problems_of(const json& j)
{
    try {
        validate_spec(parse_spec(j));
    } catch (const SpecError& e) {
        return e.problems();
    }
    return {};
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("gcslab_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(Spec, DefaultsParse)
{
    for (Kind k : {Kind::bounds_sweep, Kind::risk_curve, Kind::relu_verify, Kind::lipschitz_verify,
                   Kind::packing_verify}) {
        EXPECT_NO_THROW(validate_spec(default_spec(k))) << kind_name(k);
    }
}

TEST(Spec, SamplesParse)
{
    std::size_t seen = 0;
    for (const auto& e : fs::directory_iterator(GCSLAB_SAMPLES_DIR)) {
        if (e.path().extension() != ".json") continue;
        ++seen;
        const json j = json::parse(slurp(e.path()));
        EXPECT_NO_THROW(validate_spec(parse_spec(j))) << e.path();
    }
    EXPECT_EQ(seen, 5u);
}

TEST(Spec, EmptyGridIsRejected)
{
    const auto p = problems_of({{"kind", "risk_curve"}, {"grid", json::object()}});
    ASSERT_GE(p.size(), 3u);
    EXPECT_NE(p[0].find("grid"), std::string::npos);
    EXPECT_FALSE(problems_of({{"kind", "bounds_sweep"}, {"grid", {{"k", json::array()}, {"n", {8}}}}}).empty());
}

TEST(Spec, UnknownKeysAndTypesListed)
{
    const auto p = problems_of({{"kind", "bounds_sweep"},
                                {"trails", 5},
                                {"grid", {{"k", {2}}, {"n", {16}}, {"nn", {1}}}},
                                {"constants", {{"C9", 1}}},
                                {"seed", "x"}});
    ASSERT_EQ(p.size(), 4u);
    std::string all;
    for (const auto& s : p) all += s + "\n";
    EXPECT_NE(all.find("trails"), std::string::npos);
    EXPECT_NE(all.find("grid.nn"), std::string::npos);
    EXPECT_NE(all.find("constants.C9"), std::string::npos);
    EXPECT_NE(all.find("seed"), std::string::npos);
}

TEST(Spec, FieldPreconditions)
{
    EXPECT_FALSE(problems_of({{"kind", "relu_verify"}, {"grid", {{"R", {3}}}}}).empty());
    EXPECT_FALSE(problems_of({{"kind", "risk_curve"}, {"grid", {{"n", {16}}, {"k", {2}}, {"m", {0}}, {"alpha", {1}}}}})
                     .empty());
    EXPECT_FALSE(problems_of({{"kind", "nope"}, {"grid", {{"k", {1}}}}}).empty());
    EXPECT_FALSE(problems_of({{"kind", "relu_verify"}, {"grid", {{"k0_n0", {{2, 4}, {1}}}}}}).empty());
    EXPECT_FALSE(problems_of({{"kind", "relu_verify"}, {"grid", {{"R", {2}}, {"regime", {"mixed(x)"}}}}}).empty());
    EXPECT_TRUE(parse_regime("mixed(6)").has_value());
}

TEST(Spec, CanonicalFormIgnoresThreadsAndOut)
{
    auto a = default_spec(Kind::risk_curve);
    auto b = a;
    b.threads = 4;
    b.out = "/elsewhere";
    EXPECT_EQ(canonical_json(a), canonical_json(b));
    b.seed = 99;
    EXPECT_NE(canonical_json(a), canonical_json(b));
    // canonical form parses back to the same spec
    EXPECT_EQ(canonical_json(parse_spec(canonical_json(a))), canonical_json(a));
}

TEST(Run, BoundsSweepNineRows)
{
    const auto res = run(parse_spec({{"kind", "bounds_sweep"}, {"grid", {{"n_over_k", {4, 8, 16}}, {"k", {1, 2, 4}}}}}));
    ASSERT_EQ(res.table.rows().size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(res.table.get(i, "packing_flag"), "true");
        EXPECT_EQ(res.table.get(i, "status"), "ok");
    }
    EXPECT_TRUE(res.all_ok());
}

TEST(Run, CsvCarriesManifest)
{
    const auto res = run(parse_spec({{"kind", "bounds_sweep"}, {"grid", {{"n", {16}}, {"k", {2}}}}}));
    const std::string csv = res.csv();
    EXPECT_EQ(csv.rfind("# schema=gcslab-results/1 kind=bounds_sweep manifest=" + res.manifest_id + "\n", 0), 0u);
    const auto dir = scratch("manifest");
    write_outputs(res, dir);
    const auto m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m.at("manifest_id"), res.manifest_id);
    EXPECT_EQ(m.at("rng"), kRngAlgorithm);
    EXPECT_EQ(m.at("cells").size(), 1u);
    EXPECT_NE(slurp(dir / "plot.svg").find("manifest=" + res.manifest_id), std::string::npos);
    fs::remove_all(dir);
}

TEST(Run, CellFailuresDoNotAbort)
{
    // n=6 is not a multiple of k=4; n=4 with k=4 is below C0 for the packing quantities
    const auto res = run(parse_spec({{"kind", "risk_curve"},
                                     {"grid", {{"n", {6, 16}}, {"k", {4}}, {"m", {2}}, {"alpha", {1.0}}}},
                                     {"trials", 10}}));
    ASSERT_EQ(res.status.size(), 2u);
    EXPECT_EQ(res.status[0].rfind("skipped(", 0), 0u);
    EXPECT_EQ(res.status[1], "ok");
    EXPECT_TRUE(res.all_ok());
}

TEST(Run, EnumerationCapGivesSkip)
{
    const auto res = run(parse_spec({{"kind", "packing_verify"}, {"grid", {{"k", {3}}, {"n_over_k", {40, 2}}}}}));
    ASSERT_EQ(res.status.size(), 2u);
    EXPECT_EQ(res.status[0].rfind("skipped(", 0), 0u);
    EXPECT_NE(res.status[0].find("cap"), std::string::npos);
    EXPECT_EQ(res.status[1].rfind("skipped(", 0), 0u);
}

TEST(Run, RiskCurveTrendAndThresholds)
{
    const auto res = run(parse_spec({{"kind", "risk_curve"},
                                     {"grid", {{"n", {16}}, {"k", {2}}, {"alpha", {1.0}},
                                               {"m", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16}},
                                               {"L", {20.0}}}},
                                     {"trials", 500},
                                     {"xi", 1.0}}));
    ASSERT_TRUE(res.all_ok());
    std::vector<double> risk, se;
    for (std::size_t i = 0; i < res.table.rows().size(); ++i) {
        risk.push_back(std::stod(res.table.get(i, "risk")));
        se.push_back(std::stod(res.table.get(i, "std_error")));
        // overlays equal the bounds module for the same cell
        const double m = static_cast<double>(i + 1);
        EXPECT_NEAR(std::stod(res.table.get(i, "minimax_lower")), minimax_lower(16, 2, 1.0 / m, 16), 1e-9);
        EXPECT_NEAR(std::stod(res.table.get(i, "threshold_required_m_lower")), required_m_lower(16, 2, 1, 1), 1e-9);
        EXPECT_NEAR(std::stod(res.table.get(i, "threshold_upper_m_rect")),
                    upper_m_lipschitz(2, 20, 1, 1, Domain::rect), 1e-9);
    }
    EXPECT_GT(risk.front(), 1.0);   // C1 alpha
    EXPECT_LT(risk.back(), 1.0);
    int bumps = 0;
    for (std::size_t i = 1; i < risk.size(); ++i) bumps += risk[i] > risk[i - 1] + 3 * std::hypot(se[i], se[i - 1]);
    EXPECT_EQ(bumps, 0);
}

TEST(Run, XiChoicePerCell)
{
    const auto res = run(parse_spec({{"kind", "risk_curve"},
                                     {"grid", {{"n", {16}}, {"k", {2}}, {"alpha", {1.0}}, {"m", {1, 4}}}},
                                     {"trials", 20},
                                     {"trial_csv", true}}));
    EXPECT_NEAR(std::stod(res.table.get(1, "xi")), xi_choice(16, 2, 0.25, 16), 1e-15);
    ASSERT_TRUE(res.trials.has_value());
    EXPECT_EQ(res.trials->rows().size(), 40u);
}

TEST(Run, VerifiersPass)
{
    EXPECT_TRUE(run(default_spec(Kind::relu_verify)).all_ok());
    auto lip = default_spec(Kind::lipschitz_verify);
    lip.pairs = 5000;
    EXPECT_TRUE(run(lip).all_ok());
    EXPECT_TRUE(run(parse_spec({{"kind", "packing_verify"}, {"grid", {{"k", {1, 2}}, {"n_over_k", {4, 6, 9}}}}})).all_ok());
}

TEST(Run, DeterministicAcrossThreads)
{
    auto s = parse_spec({{"kind", "risk_curve"},
                         {"grid", {{"n", {8, 16}}, {"k", {2}}, {"alpha", {0.5}}, {"m", {1, 3, 5}}}},
                         {"trials", 50},
                         {"seed", 17}});
    const std::string a = run(s).csv();
    s.threads = 4;
    EXPECT_EQ(run(s).csv(), a);
    s.seed = 18;
    EXPECT_NE(run(s).csv(), a);
}

TEST(Probe, LipschitzAndPatterns)
{
    const auto p = GenModelParams::make(12, 3, 1.0, 0.5);
    const auto pr = lipschitz_probe(p, 20000, 200, 1, 0);
    EXPECT_EQ(pr.violations, 0u);
    EXPECT_LE(pr.max_ratio, pr.L * (1 + 1e-9));
    EXPECT_GE(pr.adversarial_min_ratio, pr.L * (1 - 1e-9));
    RecursiveGenParams rp;
    rp.k = 2;
    rp.k0 = 2;
    rp.n0 = 4;
    const auto pc = recursive_pattern_check(rp, build_recursive_generator(rp, Deep{}));
    EXPECT_TRUE(pc.bijective);
    EXPECT_EQ(pc.distinct, 16u);
}

TEST(Plot, TwoPointCsv)
{
    const std::string svg = emit_plot("m,risk\n1,0.5\n2,0.25\n");
    EXPECT_EQ(count(svg, "<polyline"), 1u);
    const std::regex pts("points=\"([^\"]*)\"");
    std::smatch mt;
    ASSERT_TRUE(std::regex_search(svg, mt, pts));
    EXPECT_EQ(count(mt[1].str(), ","), 2u);
    EXPECT_EQ(count(svg, "class=\"threshold\""), 0u);
}

TEST(Plot, OneMarkerPerThreshold)
{
    const std::string csv =
        "# schema=x\nseries,m,risk,threshold_a,threshold_b\ns,1,1,2.5,7\ns,2,0.5,2.5,7\nt,1,0.2,3,\n";
    const std::string svg = emit_plot(csv);
    EXPECT_EQ(count(svg, "class=\"threshold\""), 3u);
    EXPECT_NE(svg.find("data-value=\"2.5\""), std::string::npos);
    EXPECT_EQ(count(svg, "<polyline"), 2u);
}

TEST(Plot, MarkersMatchRunThresholds)
{
    const auto res = run(parse_spec({{"kind", "risk_curve"},
                                     {"grid", {{"n", {32}}, {"k", {2}}, {"alpha", {0.5}}, {"m", {2, 4}}, {"L", {30.0}}}},
                                     {"trials", 16}}));
    const std::string svg = emit_plot(res.csv());
    const std::regex mark("data-column=\"(threshold_[a-z_]+)\" data-value=\"([^\"]+)\"");
    std::size_t found = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), mark); it != std::sregex_iterator(); ++it) {
        const std::string col = (*it)[1];
        const double v = std::stod((*it)[2]);
        double expect = 0;
        if (col == "threshold_required_m_lower") expect = required_m_lower(32, 2, 1, 1);
        else if (col == "threshold_upper_m_rect") expect = upper_m_lipschitz(2, 30, 1, 0.5, Domain::rect);
        else expect = upper_m_lipschitz(2, 30, 1, 0.5, Domain::sphere);
        EXPECT_NEAR(v, expect, 1e-9) << col;
        ++found;
    }
    EXPECT_EQ(found, 3u);
}

TEST(Plot, PureFunctionOfCsv)
{
    const std::string csv = "m,risk,minimax_lower\n1,1,0.1\n2,0.5,0.05\n4,0,0.025\n";
    EXPECT_EQ(emit_plot(csv), emit_plot(csv));
    EXPECT_EQ(count(emit_plot(csv), "class=\"reference\""), 1u);
}

TEST(Plot, MalformedCsvReportsLine)
{
    try {
        emit_plot("m,risk\n1,2\n3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        emit_plot("# c\nm,risk\n1,2\n2,abc\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
    }
    EXPECT_THROW(emit_plot("a,b\n1,2\n"), ParseError);
    EXPECT_THROW(emit_plot(""), ParseError);
}

TEST(Table, UnknownColumnAndCsvRoundTrip)
{
    Table t({"a", "b"});
    EXPECT_THROW(t.row().set("c", 1.0), InvalidInput);
    t.add(t.row().set("a", 0.1).set("b", std::size_t{3}));
    const auto p = parse_csv(t.to_csv("hello"));
    EXPECT_EQ(p.comments.at(0), "# hello");
    EXPECT_EQ(std::stod(p.rows.at(0).at(0)), 0.1);

    Table u({"status"});
    u.add(u.row().set("status", "skipped(a, b)"));
    EXPECT_EQ(parse_csv(u.to_csv("x")).rows.at(0).at(0), "skipped(a; b)");
}

// ---------------------------------------------------------------------------
// CLI end to end

namespace {

std::string cli()
{
    const char* p = std::getenv("GCSLAB_CLI");
    return p ? p : "";
}

int sh(const std::string& cmd)
{
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Cli, RunsAndWritesOutputs)
{
    if (cli().empty()) GTEST_SKIP() << "GCSLAB_CLI not set";
    const auto dir = scratch("cli");
    const auto spec = dir.string() + ".json";
    {
        std::ofstream f(spec);
        f << json{{"kind", "risk_curve"}, {"grid", {{"n", {16}}, {"k", {2}}, {"alpha", {1.0}}, {"m", {1, 2, 4}}}}}.dump();
    }
    EXPECT_EQ(sh(cli() + " risk --spec " + spec + " --out " + dir.string() + " --trials 20 --seed 3 --threads 2"), 0);
    EXPECT_TRUE(fs::exists(dir / "results.csv"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
    EXPECT_TRUE(fs::exists(dir / "plot.svg"));
    const std::string first = slurp(dir / "results.csv");
    EXPECT_NE(first.find(",20,"), std::string::npos);
    EXPECT_EQ(sh(cli() + " risk --spec " + spec + " --out " + dir.string() + " --trials 20 --seed 3"), 0);
    EXPECT_EQ(slurp(dir / "results.csv"), first);
    EXPECT_EQ(sh(cli() + " plot --csv " + (dir / "results.csv").string() + " --out " + (dir / "again.svg").string()), 0);
    EXPECT_EQ(slurp(dir / "again.svg"), slurp(dir / "plot.svg"));
    // kind mismatch and invalid spec
    EXPECT_EQ(sh(cli() + " bounds --spec " + spec + " --out " + dir.string()), 2);
    {
        std::ofstream f(spec);
        f << R"({"kind": "risk_curve", "grid": {}, "bogus": 1})";
    }
    EXPECT_EQ(sh(cli() + " risk --spec " + spec + " --out " + dir.string()), 2);
    EXPECT_NE(sh(cli() + " frobnicate"), 0);
    fs::remove_all(dir);
    fs::remove(spec);
}

TEST(Cli, FailedCellGivesNonzeroExit)
{
    if (cli().empty()) GTEST_SKIP() << "GCSLAB_CLI not set";
    const auto dir = scratch("cli_fail");
    const auto spec = dir.string() + ".json";
    {
        // with C0 lowered to 1, (n=2, k=1) runs but its Fano bracket is below 1/2
        std::ofstream f(spec);
        f << json{{"kind", "packing_verify"}, {"grid", {{"k", {1}}, {"n_over_k", {2}}}}, {"constants", {{"C0", 1.0}}}}
                 .dump();
    }
    const int rc = sh(cli() + " verify-packing --spec " + spec + " --out " + dir.string());
    EXPECT_EQ(rc, 1);
    const auto m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m.at("cells").at(0).at("status").get<std::string>().rfind("failed(", 0), 0u);
    fs::remove_all(dir);
    fs::remove(spec);
}
