#ifndef ANNOMESH_SWARM_HPP
#define ANNOMESH_SWARM_HPP

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "annomesh/config.hpp"
#include "annomesh/env.hpp"
#include "annomesh/mesh/node.hpp"
#include "annomesh/metrics.hpp"

namespace annomesh::swarm {

using mesh::Step;

/// A runtime check of the shared memory failed.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QueryLedgerEntry {
    enum class State { Pending, Expired, Consolidated };

    mesh::QueryId query = 0;
    float x = 0, y = 0;
    Step started = 0;
    std::size_t replies = 0;
    State state = State::Pending;
    // Consolidated tuple waiting for routing room, with its vote count.
    std::optional<mesh::Tuple> unsent;
    int votes = 0;
};

struct TimeoutState {
    int recording = 0;
    int querying = 0;

    void tick() {
        if (recording > 0) --recording;
        if (querying > 0) --querying;
    }
};

struct Agent {
    mesh::Node node;
    env::AgentPose pose;
    TimeoutState timeouts;
    std::vector<QueryLedgerEntry> ledger;  // pending queries only
    env::Rng rng;
    std::vector<std::shared_ptr<const mesh::MeshMessage>> inbox;
    std::map<mesh::TupleId, Step> held_since;  // stored tuples, reset when their location is queried
};

/// Lock-step driver: every step all agents read the previous step's
/// messages, move, act on their own state and publish one message each.
class Swarm {
public:
    Swarm(SimConfig config, env::Scene scene, std::uint64_t seed);
    /// Fixed initial poses, for scripted runs.
    Swarm(SimConfig config, env::Scene scene, std::uint64_t seed, std::vector<env::AgentPose> poses);

    void step();
    Step now() const { return now_; }

    const SimConfig& config() const { return config_; }
    const env::Scene& scene() const { return scene_; }
    const std::vector<Agent>& agents() const { return agents_; }
    Agent& agent(std::size_t i) { return agents_.at(i); }

    /// Hands a tuple to agent i's store() and registers it with the audit.
    mesh::StoreOutcome inject(std::size_t i, const mesh::Tuple& tuple);
    /// Raw tuple for object `object` labelled `label`, created by agent i.
    mesh::Tuple make_tuple(std::size_t i, std::size_t object, int label, bool consolidated = false);

    /// Consolidated annotations currently held or in transit.
    std::vector<metrics::MapEntry> consolidated_map() const;
    /// Tuple counts held or in transit, per object index.
    std::vector<std::size_t> raw_counts() const;
    std::vector<std::size_t> consolidated_counts() const;

    /// Throws InvariantViolation on lost or duplicated tuples, capacity
    /// overflow or an acceptance below the tuple hash.
    void audit();

    metrics::Trace& trace() { return trace_; }
    const metrics::Trace& trace() const { return trace_; }
    /// Closes the trace: final map and byte counters of the partial second.
    metrics::Trace finish();

private:
    void act(std::size_t i);
    void sense(Agent& agent);
    void scan(Agent& agent);
    void resolve(Agent& agent);
    bool consolidate(Agent& agent, QueryLedgerEntry& entry);
    void record_frame();
    void track(const mesh::Tuple& tuple, mesh::StoreOutcome outcome);
    std::optional<std::size_t> object_at(float x, float y) const;
    template <class Visit>
    void for_each_live(Visit&& visit) const;

    SimConfig config_;
    env::Scene scene_;
    mesh::UncertaintyHash hash_;
    std::vector<Agent> agents_;
    std::vector<std::vector<std::size_t>> graph_;
    Step now_ = 0;

    std::map<std::pair<float, float>, std::size_t> object_index_;
    std::vector<bool> observed_;
    std::unordered_set<mesh::TupleId> live_;
    std::map<mesh::TupleId, int> votes_;
    std::vector<std::shared_ptr<const mesh::MeshMessage>> in_flight_;
    std::uint64_t bytes_total_ = 0;
    std::uint64_t bytes_counted_ = 0;  // independent tally from the layout table
    std::vector<std::uint64_t> bytes_this_second_;

    metrics::Trace trace_;
};

env::Scene make_scene(const SimConfig& config);

/// Runs `steps` steps of a fresh swarm. Deterministic in (config, seed).
metrics::Trace run_experiment(const SimConfig& config, std::uint64_t seed, Step steps);

}  // namespace annomesh::swarm

#endif  // ANNOMESH_SWARM_HPP
