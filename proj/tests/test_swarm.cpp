#include <doctest.h>

#include <set>
#include <sstream>

#include "annomesh/swarm.hpp"

using namespace annomesh;
using swarm::Swarm;

namespace {

// One box facing -x at (2, 2); a pose at (1.2, 2) heading +x sees it.
env::Scene one_box(int true_class) {
    env::Scene scene;
    scene.arena_size = 4;
    env::SceneObject o;
    o.id = 0;
    o.true_class = true_class;
    o.box.center = {2, 2, 0.15};
    o.box.dims = {0.3, 0.3, 0.3};
    o.box.yaw = std::numbers::pi;
    scene.objects.push_back(o);
    return scene;
}

SimConfig static_config(std::size_t agents) {
    SimConfig c;
    c.agents = agents;
    c.motion_enabled = false;
    c.comm_range = 3;
    c.scene.arena_size = 4;
    return c;
}

// Agents in a column left of the box, looking at it or away from it.
std::vector<env::AgentPose> column(std::size_t n, bool looking) {
    std::vector<env::AgentPose> poses;
    for (std::size_t i = 0; i < n; ++i)
        poses.push_back({{1.2, 2 + 0.06 * (double(i) - double(n - 1) / 2)}, looking ? 0.0 : std::numbers::pi});
    return poses;
}

int cls(const char* name) { return ensemble::ClassModel::scenenn_bga_dgcnn().class_index(name); }

}  // namespace

TEST_CASE("a detection yields one store and starts the recording timeout") {
    SimConfig c = static_config(1);
    Swarm sim(c, one_box(cls("chair")), 1, column(1, true));
    sim.step();
    CHECK(sim.trace().observations.size() == 1);
    CHECK(sim.agents()[0].timeouts.recording == c.recording_timeout);
    CHECK(sim.raw_counts()[0] + sim.consolidated_counts()[0] == 1);
    for (int s = 1; s < c.recording_timeout; ++s) sim.step();
    CHECK(sim.trace().observations.size() == 1);
    sim.step();
    CHECK(sim.trace().observations.size() == 2);
}

TEST_CASE("scripted votes consolidate to the plurality and erase the raw tuples") {
    SimConfig c = static_config(3);
    Swarm sim(c, one_box(cls("chair")), 3, column(3, false));
    sim.step();
    // Agent 0 holds two tuples at the location, so it alone asks.
    sim.inject(0, sim.make_tuple(0, 0, cls("chair")));
    sim.inject(0, sim.make_tuple(0, 0, cls("chair")));
    sim.inject(2, sim.make_tuple(2, 0, cls("table")));
    for (int s = 0; s < 400; ++s) sim.step();
    REQUIRE(sim.trace().consolidations.size() == 1);
    const auto& event = sim.trace().consolidations[0];
    CHECK(event.label == cls("chair"));
    CHECK(event.votes == 3);
    const auto map = sim.consolidated_map();
    REQUIRE(map.size() == 1);
    CHECK(map[0].label == cls("chair"));
    CHECK(map[0].correct());
    CHECK(sim.raw_counts()[0] == 0);
    // The survivor is the tuple the consolidation created.
    std::size_t held = 0;
    for (const auto& a : sim.agents())
        for (const auto& t : a.node.stored()) {
            ++held;
            CHECK(t.key.id == event.tuple);
            CHECK(t.key.hash == 0);
        }
    CHECK(held == 1);
}

TEST_CASE("too few votes expire and the location is queried again later") {
    SimConfig c = static_config(2);
    c.revisit_after = 20;
    Swarm sim(c, one_box(cls("chair")), 4, column(2, false));
    sim.step();
    sim.inject(0, sim.make_tuple(0, 0, cls("chair")));
    sim.inject(1, sim.make_tuple(1, 0, cls("bed")));
    std::set<mesh::QueryId> queries;
    bool rearmed = false;
    for (int s = 0; s < 600; ++s) {
        sim.step();
        for (const auto& a : sim.agents()) {
            for (const auto& e : a.ledger) queries.insert(e.query);
            rearmed |= a.timeouts.querying > 0;
        }
    }
    CHECK(sim.trace().consolidations.empty());
    CHECK(sim.raw_counts()[0] == 2);
    CHECK(queries.size() >= 2);
    CHECK(rearmed);
}

TEST_CASE("a single agent with one vote consolidates what it saw") {
    SimConfig c = static_config(1);
    c.min_votes = 1;
    Swarm sim(c, one_box(cls("bed")), 9, column(1, true));
    // Alone, delta is 1: the tuple waits out the store ttl before it lands.
    for (int s = 0; s < 200; ++s) sim.step();
    REQUIRE_FALSE(sim.trace().observations.empty());
    const auto map = sim.consolidated_map();
    REQUIRE(map.size() == 1);
    CHECK(map[0].label == sim.trace().observations[0].label);
    CHECK(map[0].votes == 1);
}

TEST_CASE("static connected swarm settles on one consolidation") {
    SimConfig c = static_config(6);
    c.recording_timeout = 5000;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Swarm sim(c, one_box(cls("desk")), seed, column(6, true));
        for (int s = 0; s < 1500; ++s) sim.step();
        CHECK(sim.trace().observations.size() == 6);
        CHECK(sim.consolidated_counts()[0] == 1);
        CHECK(sim.raw_counts()[0] == 0);
        for (const auto& e : sim.trace().consolidations) CHECK(e.votes >= c.min_votes);
    }
}

TEST_CASE("default runs respect coverage ordering and the vote floor") {
    SimConfig c;
    c.min_votes = 4;
    const auto trace = swarm::run_experiment(c, 2, 3000);
    REQUIRE(trace.frames.size() == 3000);
    double last = 0;
    for (const auto& f : trace.frames) {
        CHECK(f.consolidation_coverage <= f.observation_coverage + 1e-12);
        CHECK(f.observation_coverage >= last);
        last = f.observation_coverage;
        CHECK(f.stored_items <= c.agents * c.mesh.storage_capacity);
    }
    CHECK_FALSE(trace.consolidations.empty());
    for (const auto& e : trace.consolidations) CHECK(e.votes >= 4);
    for (const auto& e : trace.final_map) CHECK(e.votes >= 4);
}

TEST_CASE("runs are deterministic in the seed") {
    SimConfig c;
    const auto a = swarm::run_experiment(c, 6, 800);
    const auto b = swarm::run_experiment(c, 6, 800);
    const auto d = swarm::run_experiment(c, 7, 800);
    std::ostringstream fa, fb, fd;
    metrics::write_frames_csv(fa, a.frames);
    metrics::write_frames_csv(fb, b.frames);
    metrics::write_frames_csv(fd, d.frames);
    CHECK(fa.str() == fb.str());
    CHECK(fa.str() != fd.str());
    CHECK(a.observations.size() == b.observations.size());
    CHECK(a.nodeid_histogram == b.nodeid_histogram);
}

TEST_CASE("isolated agents transmit nothing") {
    SimConfig c = static_config(3);
    c.comm_range = 0.01;
    std::vector<env::AgentPose> poses{{{0.5, 0.5}, 0}, {{3.5, 0.5}, 0}, {{0.5, 3.5}, 0}};
    Swarm sim(c, one_box(0), 1, poses);
    for (int s = 0; s < 100; ++s) sim.step();
    const auto t = sim.finish();
    CHECK(t.frames.back().bytes_sent_total == 0);
    CHECK(t.nodeid_histogram.size() == 1);
    CHECK(t.nodeid_histogram.begin()->first == 1);
}

TEST_CASE("config parsing") {
    std::istringstream good("# comment\nagents = 12\nmin_votes=5 # trailing\nmotion_enabled = false\n"
                            "class_accuracy = a:0.5, b:0.75\n");
    const SimConfig c = parse_config(good);
    CHECK(c.agents == 12);
    CHECK(c.min_votes == 5);
    CHECK_FALSE(c.motion_enabled);
    CHECK(c.classes.class_count() == 2);
    CHECK(c.classes.accuracy[1] == 0.75);

    for (const char* bad : {"agentz = 3\n", "agents = 3x\n", "agents\n", "agents = 0\n", "min_votes = -1\n",
                            "storage_capacity = 20\n", "comm_range = -1\n", "motion_enabled = maybe\n",
                            "class_accuracy = a:0.5\n", "class_accuracy = a:0.5,b:1.5\n", "dt = 0\n"}) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/annomesh.cfg"), ConfigError);

    SimConfig odd;
    odd.comm_range = 1.0 / 3;
    odd.frustum.horizontal_fov = 1.1;
    odd.audit_every = 0;
    std::istringstream text(to_text(odd));
    const SimConfig back = parse_config(text);
    CHECK(to_text(back) == to_text(odd));
    CHECK(back.comm_range == odd.comm_range);
    CHECK(back.frustum.horizontal_fov == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("scene and pose errors are config errors") {
    SimConfig c;
    c.scene_file = "/nonexistent/scene.txt";
    CHECK_THROWS_AS(swarm::make_scene(c), ConfigError);
    SimConfig two = static_config(2);
    CHECK_THROWS_AS(Swarm(two, one_box(0), 1, column(3, true)), ConfigError);
    CHECK_THROWS_AS(Swarm(two, one_box(40), 1, column(2, true)), ConfigError);
}
