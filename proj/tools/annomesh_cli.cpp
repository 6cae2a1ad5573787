// annomesh: run swarm simulations and turn their traces into tables.
//
// Exit status: 0 success, 1 bad configuration or input, 2 a runtime
// invariant of the shared memory was violated.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "annomesh/config.hpp"
#include "annomesh/metrics.hpp"
#include "annomesh/swarm.hpp"

namespace fs = std::filesystem;
using namespace annomesh;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kInvariantError = 2;

int simulate(const std::string& config_path, std::uint64_t seed, mesh::Step steps, const fs::path& out) {
    const SimConfig config = load_config(config_path);
    if (steps < 0) throw ConfigError("--steps must be nonnegative");
    swarm::Swarm sim(config, swarm::make_scene(config), seed);
    for (mesh::Step s = 0; s < steps; ++s) sim.step();
    const metrics::Trace trace = sim.finish();

    metrics::write_trace(trace, out);
    std::ofstream(out / "config.txt") << to_text(config);
    {
        std::ofstream dump(out / "mesh_dump.txt");
        dump << "# agent tuple hash class x y consolidated\n";
        for (const auto& agent : sim.agents()) agent.node.dump(dump);
    }
    {
        std::ofstream scene(out / "scene.txt");
        env::save_scene(scene, sim.scene());
    }
    const auto& last = trace.frames.empty() ? metrics::MetricsFrame{} : trace.frames.back();
    std::printf("steps=%lld observed=%.3f consolidated=%.3f accuracy=%s bytes=%llu\n",
                static_cast<long long>(trace.frames.size()), last.observation_coverage, last.consolidation_coverage,
                last.map_accuracy ? std::to_string(*last.map_accuracy).c_str() : "n/a",
                static_cast<unsigned long long>(last.bytes_sent_total));
    return kOk;
}

int ensemble_table(const std::string& classes, int n_max) {
    if (n_max < 1) throw ConfigError("--n-max must be at least 1");
    ensemble::ClassModel model = ensemble::ClassModel::scenenn_bga_dgcnn();
    if (!classes.empty()) {
        std::ifstream in(classes);
        if (!in) throw ConfigError("cannot open " + classes);
        try {
            model = metrics::read_class_csv(in);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    metrics::write_ensemble_table(std::cout, model, n_max);
    return kOk;
}

int binpack_audit(const std::string& trace_path) {
    std::vector<metrics::MetricsFrame> frames;
    try {
        frames = metrics::read_frames_csv(fs::path(trace_path));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const auto audit = metrics::audit_packing(frames);
    std::printf("step,realized,optimal,worst\n");
    for (std::size_t i = 0; i < frames.size(); ++i)
        std::printf("%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(frames[i].step), frames[i].realized_cost,
                    audit.optimal[i], audit.worst[i]);
    std::fprintf(stderr, "frames=%zu violations=%zu\n", audit.frames, audit.violations);
    return audit.violations == 0 ? kOk : kInvariantError;
}

int report(const fs::path& runs, const fs::path& out) {
    std::vector<fs::path> written;
    try {
        written = metrics::write_report(runs, out.empty() ? runs : out);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    for (const auto& p : written) std::printf("%s\n", p.string().c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"annomesh: collective annotation over a robot tuple space"};
    app.require_subcommand(1);

    std::string config_path, out_dir, classes, trace_path, runs_dir, report_out;
    std::uint64_t seed = 1;
    long long steps = 3000;
    int n_max = 8;

    auto* sim = app.add_subcommand("simulate", "run one seeded simulation and write its trace");
    sim->add_option("--config", config_path, "key = value configuration file")->required();
    sim->add_option("--seed", seed, "run seed")->required();
    sim->add_option("--steps", steps, "steps to simulate")->required();
    sim->add_option("--out", out_dir, "output directory")->required();

    auto* table = app.add_subcommand("ensemble-table", "p_ens per class for n = 1..n-max");
    table->add_option("--classes", classes, "csv of name,accuracy (default: built-in table)");
    table->add_option("--n-max", n_max, "largest vote count")->required();

    auto* audit = app.add_subcommand("binpack-audit", "optimal and worst packing cost for every trace frame");
    audit->add_option("--trace", trace_path, "trace.csv from simulate")->required();

    auto* rep = app.add_subcommand("report", "figure tables over a directory of runs");
    rep->add_option("--runs", runs_dir, "directory holding simulate outputs")->required();
    rep->add_option("--out", report_out, "output directory (default: --runs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return simulate(config_path, seed, steps, out_dir);
        if (*table) return ensemble_table(classes, n_max);
        if (*audit) return binpack_audit(trace_path);
        if (*rep) return report(runs_dir, report_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const swarm::InvariantViolation& e) {
        std::fprintf(stderr, "invariant violated: %s\n", e.what());
        return kInvariantError;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "invariant violated: %s\n", e.what());
        return kInvariantError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kOk;
}
