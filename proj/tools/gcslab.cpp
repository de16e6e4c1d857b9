// gcslab: experiment runner for the generative compressed sensing models.

#include <gcslab/harness/defaults.hpp>
#include <gcslab/harness/plot.hpp>
#include <gcslab/harness/run.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace gcslab::harness;

struct RunFlags
{
    std::string spec_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;
};

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_kind(Kind kind, const RunFlags& fl)
{
    ExperimentSpec spec;
    if (fl.spec_path.empty()) {
        spec = default_spec(kind);
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(fl.spec_path));
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << fl.spec_path << ": " << e.what() << "\n";
            return 2;
        }
        if (!j.contains("kind")) j["kind"] = kind_name(kind);
        spec = parse_spec(j);
        if (spec.kind != kind) {
            std::cerr << fl.spec_path << ": kind " << kind_name(spec.kind) << " does not match this subcommand ("
                      << kind_name(kind) << ")\n";
            return 2;
        }
    }
    if (fl.seed) spec.seed = *fl.seed;
    if (fl.trials) spec.trials = *fl.trials;
    if (fl.threads) spec.threads = *fl.threads;
    if (!fl.out.empty()) spec.out = fl.out;

    const RunResult res = run(spec);
    const auto files = write_outputs(res, spec.out);
    std::size_t ok = 0, skipped = 0, failed = 0;
    for (const auto& s : res.status) {
        if (s == "ok") ++ok;
        else if (s.rfind("skipped", 0) == 0) ++skipped;
        else ++failed;
    }
    std::cout << kind_name(kind) << ": " << res.status.size() << " cells, " << ok << " ok, " << skipped
              << " skipped, " << failed << " failed\n";
    for (std::size_t i = 0; i < res.status.size(); ++i) {
        if (res.status[i].rfind("failed", 0) == 0) std::cout << "  cell " << i << ": " << res.status[i] << "\n";
    }
    std::cout << "manifest " << res.manifest_id << " -> " << spec.out << "/{";
    for (std::size_t i = 0; i < files.size(); ++i) std::cout << (i ? "," : "") << files[i];
    std::cout << "}\n";
    return res.all_ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"gcslab: bounds, risk curves and construction checks for group-sparse generative models"};
    app.require_subcommand(1);

    struct Sub { const char* name; Kind kind; const char* help; };
    const Sub subs[] = {
        {"bounds", Kind::bounds_sweep, "tabulate lower and upper measurement bounds over a grid"},
        {"risk", Kind::risk_curve, "Monte Carlo risk vs m with bound overlays"},
        {"verify-relu", Kind::relu_verify, "check the ReLU constructions against the direct model"},
        {"verify-lipschitz", Kind::lipschitz_verify, "probe the Lipschitz constant with random and adversarial pairs"},
        {"verify-packing", Kind::packing_verify, "exhaustive checks of the packing combinatorics"},
    };
    std::vector<RunFlags> flags(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        auto* c = app.add_subcommand(subs[i].name, subs[i].help);
        auto& f = flags[i];
        c->add_option("--spec", f.spec_path, "experiment JSON (default: built-in grid)")->check(CLI::ExistingFile);
        c->add_option("--out", f.out, "output directory");
        c->add_option("--seed", f.seed, "master seed");
        c->add_option("--trials", f.trials, "Monte Carlo trials per cell")->check(CLI::PositiveNumber);
        c->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
        cmds.push_back(c);
    }

    std::string csv_path, svg_path, x = "m", y = "risk";
    bool linear = false;
    auto* plot = app.add_subcommand("plot", "render results.csv as a static SVG");
    plot->add_option("--csv", csv_path, "results CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", svg_path, "SVG path (default: next to the CSV)");
    plot->add_option("--x", x, "x column");
    plot->add_option("--y", y, "y column");
    plot->add_flag("--linear", linear, "linear y axis");

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            if (*cmds[i]) return run_kind(subs[i].kind, flags[i]);
        }
        if (*plot) {
            PlotOptions opt;
            opt.x = x;
            opt.y = y;
            opt.log_y = !linear;
            opt.title = y + " vs " + x;
            const std::string svg = emit_plot(read_file(csv_path), opt);
            if (svg_path.empty()) svg_path = (std::filesystem::path(csv_path).parent_path() / "plot.svg").string();
            write_text(svg_path, svg);
            std::cout << svg_path << "\n";
            return 0;
        }
    } catch (const SpecError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const gcslab::ParseError& e) {
        std::cerr << csv_path << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
