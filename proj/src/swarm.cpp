#include "annomesh/swarm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "annomesh/binpack.hpp"

namespace annomesh::swarm {

namespace {

mesh::Tuple tuple_for(const env::Box& box, int label, bool consolidated) {
    mesh::Tuple t;
    t.value.annotation = static_cast<mesh::ClassId>(label);
    t.value.consolidated = consolidated;
    t.value.center = box.center.cast<float>();
    t.value.yaw = static_cast<float>(box.yaw);
    t.value.front_right = box.front_right().cast<float>();
    return t;
}

bool can_take(const mesh::Node& node, mesh::TupleHash hash) {
    return (node.available() > 0 && node.node_id() > hash) || node.has_routing_room();
}

}  // namespace

env::Scene make_scene(const SimConfig& config) {
    if (config.scene_file.empty()) return env::generate_scene(config.scene, config.scene_seed);
    std::ifstream in(config.scene_file);
    if (!in) throw ConfigError("cannot open scene file " + config.scene_file);
    try {
        return env::load_scene(in, config.scene.arena_size);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scene file: ") + e.what());
    }
}

Swarm::Swarm(SimConfig config, env::Scene scene, std::uint64_t seed)
    : Swarm(config, scene, seed, [&] {
          auto rng = env::make_rng(seed, 0);
          return env::place_agents(config.agents, scene, config.motion, rng);
      }()) {}

Swarm::Swarm(SimConfig config, env::Scene scene, std::uint64_t seed, std::vector<env::AgentPose> poses)
    : config_(std::move(config)), scene_(std::move(scene)), hash_(config_.classes, config_.hash_step) {
    config_.validate();
    if (poses.size() != config_.agents) throw ConfigError("pose count differs from agent count");
    for (const auto& object : scene_.objects) {
        if (object.true_class < 0 || object.true_class >= config_.classes.class_count())
            throw ConfigError("scene object class outside the class model");
        const auto c = object.box.center.cast<float>();
        object_index_.emplace(std::pair{c.x(), c.y()}, object_index_.size());
    }
    if (object_index_.size() != scene_.objects.size()) throw ConfigError("scene objects share a center");

    agents_.reserve(config_.agents);
    for (std::size_t i = 0; i < config_.agents; ++i)
        agents_.push_back(Agent{mesh::Node(static_cast<mesh::AgentId>(i), config_.mesh), poses[i], {}, {},
                                env::make_rng(seed, i + 1), {}, {}});
    observed_.assign(scene_.objects.size(), false);
    bytes_this_second_.assign(config_.agents, 0);

    trace_.agents = config_.agents;
    trace_.objects = scene_.objects.size();
    trace_.min_votes = config_.min_votes;
    trace_.ticks_per_second = config_.ticks_per_second();
    trace_.seed = seed;
}

std::optional<std::size_t> Swarm::object_at(float x, float y) const {
    auto it = object_index_.find({x, y});
    if (it == object_index_.end()) return std::nullopt;
    return it->second;
}

mesh::Tuple Swarm::make_tuple(std::size_t i, std::size_t object, int label, bool consolidated) {
    mesh::Tuple t = tuple_for(scene_.objects.at(object).box, label, consolidated);
    t.key.id = agents_.at(i).node.next_tuple_id();
    t.key.hash = hash_(t.value.annotation, consolidated);
    return t;
}

void Swarm::track(const mesh::Tuple& tuple, mesh::StoreOutcome outcome) {
    if (outcome == mesh::StoreOutcome::Deferred) return;
    if (!live_.insert(tuple.key.id).second) throw InvariantViolation("tuple id issued twice");
    ++trace_.hash_histogram[tuple.key.hash];
}

mesh::StoreOutcome Swarm::inject(std::size_t i, const mesh::Tuple& tuple) {
    const auto outcome = agents_.at(i).node.store(tuple, now_);
    track(tuple, outcome);
    return outcome;
}

void Swarm::sense(Agent& agent) {
    if (agent.timeouts.recording > 0) return;
    const auto seen = env::frustum_detect(agent.pose, config_.frustum, scene_);
    if (!seen) return;
    const auto& object = scene_.objects[*seen];
    const int label = env::classifier_sample(object.true_class, config_.classes, agent.rng);
    mesh::Tuple t = tuple_for(object.box, label, false);
    t.key.hash = hash_(t.value.annotation, false);
    // A full agent skips the observation rather than burn a tuple id on it.
    if (!can_take(agent.node, t.key.hash)) return;
    t.key.id = agent.node.next_tuple_id();
    const auto outcome = agent.node.store(t, now_);
    track(t, outcome);
    agent.timeouts.recording = config_.recording_timeout;
    observed_[*seen] = true;
    trace_.observations.push_back({now_, agent.node.id(), static_cast<int>(*seen), label});
}

void Swarm::scan(Agent& agent) {
    auto& since = agent.held_since;
    std::erase_if(since, [&](const auto& entry) {
        return std::none_of(agent.node.stored().begin(), agent.node.stored().end(),
                            [&](const mesh::Tuple& t) { return t.key.id == entry.first; });
    });
    for (const auto& t : agent.node.stored()) since.emplace(t.key.id, now_);
    if (agent.timeouts.querying > 0) return;

    struct Group {
        std::size_t raw = 0, total = 0;
        mesh::TupleId first = 0;
        Step oldest = 0;
    };
    std::map<std::pair<float, float>, Group> groups;
    for (const auto& t : agent.node.stored()) {
        auto& g = groups[{t.value.center.x(), t.value.center.y()}];
        const Step held = since.at(t.key.id);
        if (g.total == 0 || t.key.id < g.first) g.first = t.key.id;
        if (g.total == 0 || held < g.oldest) g.oldest = held;
        ++g.total;
        if (!t.value.consolidated) ++g.raw;
    }
    const bool single_vote = config_.min_votes == 1;
    auto busy = [&](const std::pair<float, float>& where) {
        return std::any_of(agent.ledger.begin(), agent.ledger.end(),
                           [&](const QueryLedgerEntry& e) { return e.x == where.first && e.y == where.second; });
    };
    // Duplicates first, largest group first; otherwise the longest-held stale location.
    const std::pair<float, float>* pick = nullptr;
    const Group* best = nullptr;
    for (const auto& [where, g] : groups) {
        if (g.total < 2 && !(single_vote && g.raw > 0)) continue;
        if (busy(where)) continue;
        if (!best || g.total > best->total || (g.total == best->total && g.first < best->first)) {
            best = &g;
            pick = &where;
        }
    }
    if (!pick) {
        for (const auto& [where, g] : groups) {
            if (now_ - g.oldest < config_.revisit_after || busy(where)) continue;
            if (!best || g.oldest < best->oldest || (g.oldest == best->oldest && g.first < best->first)) {
                best = &g;
                pick = &where;
            }
        }
    }
    if (!pick) return;
    QueryLedgerEntry entry;
    entry.x = pick->first;
    entry.y = pick->second;
    entry.query = agent.node.get(entry.x, entry.y, 0.0f, now_);
    entry.started = now_;
    agent.ledger.push_back(entry);
    agent.timeouts.querying = config_.querying_timeout;
    for (const auto& t : agent.node.stored())
        if (t.value.center.x() == entry.x && t.value.center.y() == entry.y) since[t.key.id] = now_;
}

bool Swarm::consolidate(Agent& agent, QueryLedgerEntry& entry) {
    mesh::Tuple& t = *entry.unsent;
    if (!can_take(agent.node, t.key.hash)) return false;
    t.key.id = agent.node.next_tuple_id();
    const auto outcome = agent.node.store(t, now_);
    track(t, outcome);
    agent.node.erase_except(entry.x, entry.y, 0.0f, {t.key.id}, now_);
    votes_[t.key.id] = entry.votes;
    const auto object = object_at(entry.x, entry.y);
    const int true_class = object ? scene_.objects[*object].true_class : -1;
    trace_.consolidations.push_back({now_, agent.node.id(), object ? static_cast<int>(*object) : -1, true_class,
                                     t.value.annotation, entry.votes, t.key.id});
    entry.state = QueryLedgerEntry::State::Consolidated;
    entry.unsent.reset();
    return true;
}

void Swarm::resolve(Agent& agent) {
    for (auto& entry : agent.ledger) {
        if (entry.unsent) {
            consolidate(agent, entry);
            continue;
        }
        const mesh::QueryReplies* replies = agent.node.replies(entry.query);
        if (!replies) throw InvariantViolation("pending query lost its reply record");
        entry.replies = replies->tuples.size();
        if (now_ - replies->last_reply < config_.reply_wait) continue;

        std::vector<const mesh::Tuple*> consolidated;
        std::vector<int> labels;
        const mesh::Tuple* geometry = nullptr;
        for (const auto& t : replies->tuples) {
            if (t.value.consolidated)
                consolidated.push_back(&t);
            else
                labels.push_back(t.value.annotation);
            if (!geometry || t.key.id < geometry->key.id) geometry = &t;
        }
        if (!consolidated.empty()) {
            // Already decided elsewhere: keep the oldest consolidation only.
            const auto keep = (*std::min_element(consolidated.begin(), consolidated.end(),
                                                 [](auto a, auto b) { return a->key.id < b->key.id; }))
                                  ->key.id;
            if (replies->tuples.size() > 1) agent.node.erase_except(entry.x, entry.y, 0.0f, {keep}, now_);
            entry.state = QueryLedgerEntry::State::Consolidated;
        } else if (static_cast<int>(labels.size()) >= config_.min_votes) {
            mesh::Tuple t;
            t.value = geometry->value;
            t.value.consolidated = true;
            t.value.annotation = static_cast<mesh::ClassId>(ensemble::plurality_vote(labels, agent.rng));
            t.key.hash = hash_(t.value.annotation, true);
            entry.unsent = t;
            entry.votes = static_cast<int>(labels.size());
            consolidate(agent, entry);
        } else {
            entry.state = QueryLedgerEntry::State::Expired;
            agent.timeouts.querying = std::max(agent.timeouts.querying, config_.querying_timeout);
        }
        agent.node.forget_query(entry.query);
    }
    std::erase_if(agent.ledger, [](const QueryLedgerEntry& e) {
        return e.state != QueryLedgerEntry::State::Pending;
    });
}

void Swarm::act(std::size_t i) {
    Agent& agent = agents_[i];
    agent.timeouts.tick();
    sense(agent);
    scan(agent);
    resolve(agent);
}

void Swarm::step() {
    // Receive what was published last step.
    for (auto& agent : agents_) {
        for (const auto& message : agent.inbox) agent.node.receive(*message, now_);
        agent.inbox.clear();
    }
    in_flight_.clear();

    // Move on the old poses.
    if (config_.motion_enabled) {
        std::vector<env::AgentPose> poses;
        poses.reserve(agents_.size());
        for (const auto& agent : agents_) poses.push_back(agent.pose);
        std::vector<env::AgentPose> others;
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            others.clear();
            for (std::size_t j = 0; j < poses.size(); ++j)
                if (j != i) others.push_back(poses[j]);
            agents_[i].pose = env::diffusion_step(poses[i], scene_, others, config_.motion, agents_[i].rng);
        }
    }

    std::vector<env::AgentPose> poses;
    for (const auto& agent : agents_) poses.push_back(agent.pose);
    graph_ = env::neighbor_graph(poses, config_.comm_range);
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        std::vector<mesh::AgentId> neighbors(graph_[i].begin(), graph_[i].end());
        agents_[i].node.set_neighbors(std::move(neighbors));
    }

    for (std::size_t i = 0; i < agents_.size(); ++i) act(i);

    for (std::size_t i = 0; i < agents_.size(); ++i) {
        auto& agent = agents_[i];
        mesh::MeshMessage message = agent.node.route(now_);
        ++trace_.nodeid_histogram[agent.node.node_id()];
        // Nobody in range: nothing is transmitted. route() keeps every entry
        // that needs a receiver, so only the beacon is dropped.
        if (graph_[i].empty()) continue;
        const auto bytes = mesh::wire::encode(message);
        bytes_total_ += bytes.size();
        bytes_counted_ += mesh::wire::encoded_size(message);
        bytes_this_second_[i] += bytes.size();
        auto delivered = std::make_shared<const mesh::MeshMessage>(mesh::wire::decode(bytes));
        for (std::size_t j : graph_[i]) agents_[j].inbox.push_back(delivered);
        in_flight_.push_back(std::move(delivered));
    }
    if (bytes_total_ != bytes_counted_) throw InvariantViolation("byte counters disagree");

    for (auto& agent : agents_) {
        for (mesh::TupleId id : agent.node.drain_erased())
            if (live_.erase(id) == 0) throw InvariantViolation("erased a tuple that was not live");
    }
    if (config_.audit_every > 0 && now_ % config_.audit_every == 0) audit();
    for (auto& agent : agents_) agent.node.drain_acceptances();

    record_frame();
    ++now_;
    if (now_ % trace_.ticks_per_second == 0) {
        trace_.bytes_per_second.push_back(bytes_this_second_);
        std::fill(bytes_this_second_.begin(), bytes_this_second_.end(), 0);
    }
}

template <class Visit>
void Swarm::for_each_live(Visit&& visit) const {
    for (const auto& agent : agents_) {
        for (const auto& t : agent.node.stored()) visit(t);
        for (const auto& s : agent.node.routing_queue()) visit(s.tuple);
    }
    for (const auto& message : in_flight_)
        for (const auto& request : message->requests)
            if (const auto* s = std::get_if<mesh::StoreRequest>(&request)) visit(s->tuple);
}

void Swarm::audit() {
    std::map<mesh::TupleId, int> seen;
    for_each_live([&](const mesh::Tuple& t) { ++seen[t.key.id]; });
    for (const auto& [id, count] : seen) {
        if (count != 1)
            throw InvariantViolation("tuple " + std::to_string(id) + " held " + std::to_string(count) + " times");
        if (!live_.contains(id)) throw InvariantViolation("tuple " + std::to_string(id) + " was never issued");
    }
    if (seen.size() != live_.size()) {
        std::vector<mesh::TupleId> lost;
        for (mesh::TupleId id : live_)
            if (!seen.contains(id)) lost.push_back(id);
        std::sort(lost.begin(), lost.end());
        throw InvariantViolation(std::to_string(lost.size()) + " live tuples lost at step " + std::to_string(now_) +
                                 ", first " + std::to_string(lost.front()));
    }

    const auto& p = config_.mesh;
    for (auto& agent : agents_) {
        const auto& node = agent.node;
        if (node.stored().size() > p.storage_capacity) throw InvariantViolation("storage capacity exceeded");
        if (node.routing_queue().size() + node.reserved_slots() > p.routing_capacity())
            throw InvariantViolation("routing capacity exceeded");
        for (const auto& a : agent.node.drain_acceptances())
            if (!a.fallback && a.node_id <= a.hash)
                throw InvariantViolation("tuple accepted with NodeID not above its hash");
    }
}

std::vector<metrics::MapEntry> Swarm::consolidated_map() const {
    std::vector<std::pair<mesh::TupleId, metrics::MapEntry>> found;
    for_each_live([&](const mesh::Tuple& t) {
        if (!t.value.consolidated) return;
        const auto object = object_at(t.value.center.x(), t.value.center.y());
        if (!object) return;
        auto votes = votes_.find(t.key.id);
        found.push_back({t.key.id,
                         {static_cast<int>(*object), scene_.objects[*object].true_class, t.value.annotation,
                          votes == votes_.end() ? 0 : votes->second}});
    });
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<metrics::MapEntry> map;
    for (auto& [id, entry] : found) map.push_back(entry);
    return map;
}

std::vector<std::size_t> Swarm::raw_counts() const {
    std::vector<std::size_t> counts(scene_.objects.size(), 0);
    for_each_live([&](const mesh::Tuple& t) {
        if (t.value.consolidated) return;
        if (auto o = object_at(t.value.center.x(), t.value.center.y())) ++counts[*o];
    });
    return counts;
}

std::vector<std::size_t> Swarm::consolidated_counts() const {
    std::vector<std::size_t> counts(scene_.objects.size(), 0);
    for (const auto& e : consolidated_map()) ++counts[static_cast<std::size_t>(e.object)];
    return counts;
}

void Swarm::record_frame() {
    metrics::MetricsFrame frame;
    frame.step = now_;
    const auto observed = static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), true));
    frame.observation_coverage =
        observed_.empty() ? 0.0 : static_cast<double>(observed) / static_cast<double>(observed_.size());
    const auto map = consolidated_map();
    frame.consolidation_coverage = metrics::consolidation_coverage(map, scene_.objects.size());
    frame.map_accuracy = metrics::map_accuracy(map);
    frame.bytes_sent_total = bytes_total_;
    frame.capacity = config_.mesh.storage_capacity;
    std::vector<std::size_t> loads;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        loads.push_back(agents_[i].node.stored().size());
        frame.stored_items += loads.back();
        frame.neighbor_counts.push_back(graph_[i].size());
    }
    frame.realized_cost = binpack::load_cost(loads, frame.neighbor_counts, frame.capacity);
    trace_.frames.push_back(std::move(frame));
}

metrics::Trace Swarm::finish() {
    metrics::Trace out = trace_;
    if (now_ % out.ticks_per_second != 0) out.bytes_per_second.push_back(bytes_this_second_);
    out.final_map = consolidated_map();
    return out;
}

metrics::Trace run_experiment(const SimConfig& config, std::uint64_t seed, Step steps) {
    if (steps < 0) throw ConfigError("steps must be nonnegative");
    config.validate();
    Swarm swarm(config, make_scene(config), seed);
    for (Step s = 0; s < steps; ++s) swarm.step();
    return swarm.finish();
}

}  // namespace annomesh::swarm
