#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "annomesh/binpack.hpp"
#include "annomesh/metrics.hpp"
#include "annomesh/swarm.hpp"
#include "oracles.hpp"

using namespace annomesh;
using namespace annomesh::metrics;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("annomesh_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("coverage examples") {
    CHECK(observation_coverage({}, 10) == 0.0);
    std::vector<Observation> obs{{0, 0, 0, 1}, {5, 1, 1, 1}, {9, 2, 0, 3}};
    CHECK(observation_coverage(obs, 2) == 1.0);
    CHECK(observation_coverage(obs, 4) == 0.5);
    CHECK(observation_coverage(obs, 2, 4) == 0.5);
    std::vector<MapEntry> map{{0, 1, 1, 3}, {0, 1, 2, 3}, {3, 2, 2, 3}};
    CHECK(consolidation_coverage(map, 4) == 0.5);
    CHECK(consolidation_coverage({}, 4) == 0.0);
    CHECK(*map_accuracy(map) == doctest::Approx(2.0 / 3));
    CHECK_FALSE(map_accuracy({}).has_value());
}

TEST_CASE("quantiles interpolate") {
    CHECK(quantile({3, 1, 2}, 0.5) == 2);
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2);
    CHECK(quantile({0, 10}, 0.75) == 7.5);
    CHECK(std::isnan(quantile({}, 0.5)));
    const std::vector<double> v{4, 1, 3, 2};
    const auto s = spread(v);
    CHECK(s.mean == 2.5);
    CHECK(s.median == 2.5);
    CHECK(s.q25 == 1.75);
    CHECK(s.q75 == 3.25);
    std::map<int, std::uint64_t> h{{1, 2}, {5, 1}, {9, 3}};
    CHECK(histogram_median(h) == 5);
}

TEST_CASE("bandwidth spread") {
    Trace t;
    t.agents = 3;
    t.ticks_per_second = 10;
    t.frames.resize(20);
    t.bytes_per_second = {{0, 0, 0}, {10, 20, 60}};
    const auto per = bandwidth_per_agent(t);
    REQUIRE(per.size() == 2);
    CHECK(per[0].mean == 0);
    CHECK(per[1].mean == 30);
    CHECK(per[1].median == 20);
    CHECK(mean_bandwidth(t) == 15);
}

TEST_CASE("a swarm that never meets sends no bytes and sits at node id 1") {
    SimConfig c;
    c.agents = 4;
    c.comm_range = 0.001;
    const auto trace = swarm::run_experiment(c, 3, 400);
    for (const auto& s : bandwidth_per_agent(trace)) CHECK(s.mean == 0);
    const auto h = nodeid_hash_histograms(trace);
    REQUIRE(h.nodeid.size() == 1);
    CHECK(h.nodeid.begin()->first == 1);
    CHECK(h.nodeid.begin()->second == 4 * 400);
    for (const auto& [hash, count] : h.hash) CHECK(hash % c.hash_step == 0);
}

TEST_CASE("packing audit against brute force") {
    std::vector<MetricsFrame> frames;
    std::vector<double> realized_max;
    std::mt19937_64 rng(3);
    while (frames.size() < 150) {
        MetricsFrame f;
        f.step = static_cast<Step>(frames.size());
        f.capacity = 1 + rng() % 4;
        const std::size_t bins = 1 + rng() % 4;
        std::vector<std::size_t> loads;
        for (std::size_t b = 0; b < bins; ++b) {
            f.neighbor_counts.push_back(rng() % 4);
            loads.push_back(rng() % (f.capacity + 1));
            f.stored_items += loads.back();
        }
        if (f.stored_items > 6) continue;
        f.realized_cost = binpack::load_cost(loads, f.neighbor_counts, f.capacity);
        realized_max.push_back(oracle::brute_force_packing(f.stored_items, f.neighbor_counts, f.capacity, true));
        frames.push_back(f);
    }
    const auto audit = audit_packing(frames);
    CHECK(audit.frames == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        CHECK(std::abs(audit.optimal[i] - oracle::brute_force_packing(f.stored_items, f.neighbor_counts, f.capacity)) <
              1e-12);
        CHECK(audit.optimal[i] <= f.realized_cost + 1e-12);
        // The adversarial construction is a feasible packing, not the maximum.
        CHECK(audit.worst[i] <= realized_max[i] + 1e-12);
        CHECK(f.realized_cost <= realized_max[i] + 1e-12);
    }

    std::vector<MetricsFrame> inside = frames;
    for (std::size_t i = 0; i < inside.size(); ++i) inside[i].realized_cost = audit.optimal[i];
    CHECK(audit_packing(inside).violations == 0);
    inside[0].realized_cost -= 0.5;
    inside[1].realized_cost = audit.worst[1] + 0.5;
    CHECK(audit_packing(inside).violations == 2);
}

TEST_CASE("trace files round trip") {
    SimConfig c;
    c.agents = 8;
    const auto trace = swarm::run_experiment(c, 4, 600);
    const auto dir = scratch("roundtrip");
    write_trace(trace, dir);
    const Trace back = read_trace(dir);
    CHECK(back.agents == trace.agents);
    CHECK(back.min_votes == trace.min_votes);
    CHECK(back.seed == trace.seed);
    CHECK(back.frames == trace.frames);
    CHECK(back.observations.size() == trace.observations.size());
    CHECK(back.consolidations.size() == trace.consolidations.size());
    CHECK(back.final_map.size() == trace.final_map.size());
    CHECK(back.nodeid_histogram == trace.nodeid_histogram);
    CHECK(back.hash_histogram == trace.hash_histogram);
    CHECK(back.bytes_per_second == trace.bytes_per_second);
    const auto again = scratch("roundtrip2");
    write_trace(back, again);
    for (const char* f : {"trace.csv", "observations.csv", "consolidations.csv", "final_map.csv", "histograms.csv",
                          "bandwidth.csv", "run.txt"})
        CHECK(slurp(dir / f) == slurp(again / f));
}

TEST_CASE("report writes every figure table") {
    const auto runs = scratch("report");
    SimConfig c;
    c.agents = 6;
    for (std::uint64_t seed : {1, 2}) write_trace(swarm::run_experiment(c, seed, 300), runs / ("s" + std::to_string(seed)));
    const auto written = write_report(runs, runs / "out");
    for (const char* f : {"fig3_ensemble.csv", "fig4_coverage.csv", "fig5_accuracy.csv", "fig6_cost.csv",
                          "fig7_histograms.csv", "fig8_bandwidth.csv"}) {
        CHECK(fs::exists(runs / "out" / f));
        CHECK(fs::file_size(runs / "out" / f) > 0);
    }
    CHECK(written.size() >= 6);
    CHECK_THROWS(write_report(scratch("empty"), runs / "none"));
}

TEST_CASE("class tables") {
    std::istringstream csv("name,accuracy\nchair,0.9\ntable,0.6\n# note\nbed,0.5\n");
    const auto model = read_class_csv(csv);
    CHECK(model.class_count() == 3);
    CHECK(model.names[1] == "table");
    std::ostringstream out;
    write_ensemble_table(out, model, 3);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "class,accuracy,n,p_ens");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 9);
    std::istringstream bad("chair,0.9\ntable,1.7\n");
    CHECK_THROWS(read_class_csv(bad));
}
