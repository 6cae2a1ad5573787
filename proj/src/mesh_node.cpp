#include "annomesh/mesh/node.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace annomesh::mesh {

void MeshParams::validate() const {
    if (storage_capacity == 0 || storage_capacity >= memory_capacity)
        throw std::invalid_argument("mesh: storage capacity must be positive and leave room for routing");
    if (store_ttl < 1 || reply_ttl < 1 || flood_ttl < 1 || seen_ttl < 1)
        throw std::invalid_argument("mesh: ttl values must be positive");
    // Header plus the largest fixed-size entry must fit.
    if (bandwidth_cap < wire::kHeaderBytes + wire::kReplyBytes + wire::kEraseBaseBytes + 4)
        throw std::invalid_argument("mesh: bandwidth cap too small for a single entry");
}

Node::Node(AgentId id, MeshParams params) : id_(id), params_(params) {
    if (id == kBroadcast) throw std::invalid_argument("mesh: agent id reserved for broadcast");
    params_.validate();
}

TupleId Node::next_tuple_id() {
    if (tuple_ids_exhausted_) throw std::overflow_error("mesh: agent exhausted its 16-bit tuple counter");
    const TupleId id = make_tuple_id(id_, tuple_count_);
    if (++tuple_count_ == 0) tuple_ids_exhausted_ = true;
    return id;
}

QueryId Node::next_query_id() { return make_tuple_id(id_, query_count_++); }

void Node::set_neighbors(std::vector<AgentId> neighbors) {
    std::sort(neighbors.begin(), neighbors.end());
    neighbors_ = std::move(neighbors);
}

bool Node::mark_seen(QueryId query, Step now) { return seen_.emplace(query, now).second; }

void Node::accept(const Tuple& tuple, bool fallback) {
    if (stored_.size() >= params_.storage_capacity) throw std::logic_error("mesh: storage overflow");
    acceptances_.push_back({tuple.key.id, tuple.key.hash, node_id(), fallback});
    stored_.push_back(tuple);
}

void Node::queue_reply(Reply reply) {
    if (replies_.size() >= params_.reply_capacity) {
        ++dropped_replies_;
        return;
    }
    replies_.push_back({std::move(reply), 0});
}

void Node::answer_get(const GetRequest& get, AgentId parent) {
    auto reply_with = [&](const Tuple& t) {
        if (within(t.value, get.x, get.y, get.r)) queue_reply({parent, get.query, t});
    };
    for (const auto& t : stored_) reply_with(t);
    for (const auto& s : queue_) reply_with(s.tuple);
}

void Node::apply_erase(const EraseRequest& erase) {
    // Consolidated tuples with a smaller id than every kept id survive, so two
    // concurrent consolidations of one object leave the lower id standing
    // instead of erasing each other.
    const TupleId kept_floor =
        erase.keep.empty() ? 0 : *std::min_element(erase.keep.begin(), erase.keep.end());
    auto doomed = [&](const Tuple& t) {
        if (!within(t.value, erase.x, erase.y, erase.r)) return false;
        if (std::find(erase.keep.begin(), erase.keep.end(), t.key.id) != erase.keep.end()) return false;
        if (t.value.consolidated && !erase.keep.empty() && t.key.id < kept_floor) return false;
        erased_.push_back(t.key.id);
        return true;
    };
    std::erase_if(stored_, doomed);
    std::erase_if(queue_, [&](const StoreRequest& s) { return doomed(s.tuple); });
}

void Node::receive(const MeshMessage& message, Step now) {
    if (message.sender == id_) return;
    heard_[message.sender] = {message.node_id, message.credit, now};

    for (const auto& request : message.requests) {
        if (const auto* store = std::get_if<StoreRequest>(&request)) {
            if (store->recipient != id_) continue;  // point-to-point, not ours
            if (queue_.size() >= params_.routing_capacity())
                throw std::logic_error("mesh: routing queue overflow on receipt");
            queue_.push_back(*store);
            queue_.back().recipient = kBroadcast;
        } else if (const auto* get = std::get_if<GetRequest>(&request)) {
            if (!mark_seen(get->query, now)) continue;
            parent_[get->query] = message.sender;
            answer_get(*get, message.sender);
            floods_.push_back({*get, get->query, 0});
        } else {
            const auto& erase = std::get<EraseRequest>(request);
            if (!mark_seen(erase.query, now)) continue;
            apply_erase(erase);
            floods_.push_back({erase, erase.query, 0});
        }
    }

    for (const auto& reply : message.replies) {
        if (reply.recipient != id_) continue;
        if (auto own = own_queries_.find(reply.query); own != own_queries_.end()) {
            auto& tuples = own->second.tuples;
            const bool duplicate = std::any_of(tuples.begin(), tuples.end(),
                                               [&](const Tuple& t) { return t.key.id == reply.tuple.key.id; });
            if (!duplicate) tuples.push_back(reply.tuple);
            own->second.last_reply = now;
        } else if (auto parent = parent_.find(reply.query); parent != parent_.end()) {
            queue_reply({parent->second, reply.query, reply.tuple});
        }
    }
}

StoreOutcome Node::store(const Tuple& tuple, Step /*now*/) {
    if (available() > 0 && node_id() > tuple.key.hash) {
        accept(tuple, false);
        return StoreOutcome::Stored;
    }
    if (!has_routing_room()) return StoreOutcome::Deferred;
    queue_.push_back({kBroadcast, 0, tuple});
    return StoreOutcome::Queued;
}

QueryId Node::get(float x, float y, float r, Step now) {
    const QueryId query = next_query_id();
    mark_seen(query, now);
    QueryReplies& own = own_queries_[query];
    own = QueryReplies{now, now, {}};
    for (const auto& t : stored_)
        if (within(t.value, x, y, r)) own.tuples.push_back(t);
    for (const auto& s : queue_)
        if (within(s.tuple.value, x, y, r)) own.tuples.push_back(s.tuple);
    floods_.push_back({GetRequest{query, id_, x, y, r}, query, 0});
    return query;
}

QueryId Node::erase_except(float x, float y, float r, std::vector<TupleId> keep, Step now) {
    const QueryId query = next_query_id();
    mark_seen(query, now);
    EraseRequest erase{query, id_, x, y, r, std::move(keep)};
    apply_erase(erase);
    floods_.push_back({std::move(erase), query, 0});
    return query;
}

const QueryReplies* Node::replies(QueryId query) const {
    auto it = own_queries_.find(query);
    return it == own_queries_.end() ? nullptr : &it->second;
}

void Node::forget_query(QueryId query) { own_queries_.erase(query); }

MeshMessage Node::route(Step now) {
    // Absorb what we may hold; force-store what has waited too long.
    std::vector<StoreRequest> pending;
    pending.swap(queue_);
    for (auto& request : pending) {
        if (available() > 0 && node_id() > request.tuple.key.hash) {
            accept(request.tuple, false);
        } else if (request.age >= params_.store_ttl) {
            if (available() == 0) {
                auto victim = std::min_element(stored_.begin(), stored_.end(), [](const Tuple& a, const Tuple& b) {
                    return a.key.hash != b.key.hash ? a.key.hash < b.key.hash : a.key.id < b.key.id;
                });
                queue_.push_back({kBroadcast, 0, *victim});
                stored_.erase(victim);
            }
            accept(request.tuple, true);
        } else {
            queue_.push_back(request);
        }
    }

    // Greedy ascent: hand each waiting store to the best neighbor with credit.
    const NodeId self = node_id();
    std::map<AgentId, std::pair<NodeId, int>> candidates;  // id -> (NodeID, credit left)
    for (AgentId n : neighbors_) {
        auto it = heard_.find(n);
        if (it != heard_.end() && it->second.heard == now && it->second.credit > 0)
            candidates[n] = {it->second.node_id, it->second.credit};
    }
    std::stable_sort(queue_.begin(), queue_.end(), [](const StoreRequest& a, const StoreRequest& b) {
        return a.age != b.age ? a.age > b.age : a.tuple.key.id < b.tuple.key.id;
    });
    for (auto& request : queue_) request.recipient = kBroadcast;
    for (auto& request : queue_) {
        auto best = candidates.end();
        for (auto it = candidates.begin(); it != candidates.end(); ++it)
            if (it->second.second > 0 && (best == candidates.end() || it->second.first > best->second.first))
                best = it;
        if (best == candidates.end()) break;
        const NodeId target = best->second.first;
        if (target > request.tuple.key.hash || target > self) {
            request.recipient = best->first;
            --best->second.second;
        }
    }

    // Serialize by priority within the bandwidth cap: replies, erases, stores, gets.
    MeshMessage message;
    message.sender = id_;
    message.node_id = self;
    std::size_t size = wire::kHeaderBytes;
    auto fits = [&](std::size_t bytes, std::size_t count) {
        return size + bytes <= params_.bandwidth_cap && count < wire::kMaxEntries;
    };

    std::vector<std::size_t> reply_order;
    for (std::size_t i = 0; i < replies_.size(); ++i)
        if (std::binary_search(neighbors_.begin(), neighbors_.end(), replies_[i].reply.recipient))
            reply_order.push_back(i);
    std::stable_sort(reply_order.begin(), reply_order.end(), [&](std::size_t a, std::size_t b) {
        const Reply& ra = replies_[a].reply;
        const Reply& rb = replies_[b].reply;
        return ra.query != rb.query ? ra.query < rb.query : ra.tuple.key.id < rb.tuple.key.id;
    });
    std::vector<bool> reply_sent(replies_.size(), false);
    for (std::size_t i : reply_order) {
        if (!fits(wire::kReplyBytes, message.replies.size())) continue;
        message.replies.push_back(replies_[i].reply);
        size += wire::kReplyBytes;
        reply_sent[i] = true;
    }

    std::stable_sort(floods_.begin(), floods_.end(),
                     [](const PendingFlood& a, const PendingFlood& b) { return a.query < b.query; });
    std::vector<bool> flood_sent(floods_.size(), false);
    auto send_floods = [&](bool erases) {
        if (neighbors_.empty()) return;
        for (std::size_t i = 0; i < floods_.size(); ++i) {
            if (std::holds_alternative<EraseRequest>(floods_[i].request) != erases) continue;
            const std::size_t bytes = wire::size_of(floods_[i].request);
            if (!fits(bytes, message.requests.size())) continue;
            message.requests.push_back(floods_[i].request);
            size += bytes;
            flood_sent[i] = true;
        }
    };
    send_floods(true);

    std::vector<StoreRequest> kept;
    std::vector<StoreRequest> outbound;
    for (auto& request : queue_)
        (request.recipient != kBroadcast ? outbound : kept).push_back(request);
    std::sort(outbound.begin(), outbound.end(),
              [](const StoreRequest& a, const StoreRequest& b) { return a.tuple.key.id < b.tuple.key.id; });
    for (auto& request : outbound) {
        if (fits(wire::kStoreBytes, message.requests.size())) {
            StoreRequest sent = request;
            sent.age = static_cast<std::uint16_t>(std::min<int>(sent.age + 1, 0xFFFF));
            message.requests.emplace_back(sent);
            size += wire::kStoreBytes;
        } else {
            request.recipient = kBroadcast;
            kept.push_back(request);
        }
    }
    queue_ = std::move(kept);

    send_floods(false);

    // Age what stays behind.
    for (auto& request : queue_) request.age = static_cast<std::uint16_t>(std::min<int>(request.age + 1, 0xFFFF));
    std::deque<PendingReply> waiting;
    for (std::size_t i = 0; i < replies_.size(); ++i) {
        if (reply_sent[i]) continue;
        if (++replies_[i].age > params_.reply_ttl) continue;
        waiting.push_back(std::move(replies_[i]));
    }
    replies_ = std::move(waiting);
    std::vector<PendingFlood> floods;
    for (std::size_t i = 0; i < floods_.size(); ++i) {
        if (flood_sent[i]) continue;
        if (++floods_[i].age > params_.flood_ttl) continue;
        floods.push_back(std::move(floods_[i]));
    }
    floods_ = std::move(floods);

    std::erase_if(seen_, [&](const auto& entry) { return now - entry.second > params_.seen_ttl; });
    std::erase_if(parent_, [&](const auto& entry) { return !seen_.contains(entry.first); });
    std::erase_if(heard_, [&](const auto& entry) { return entry.second.heard < now; });

    // Grant credit for the next step. Arrivals against the previous grant are
    // still in flight, so it stays reserved until it is replaced here. One
    // slot is held back so the agent can still queue its own stores.
    const std::size_t committed = queue_.size() + reserved_ + 1;
    const std::size_t free_slots =
        committed < params_.routing_capacity() ? params_.routing_capacity() - committed : 0;
    std::size_t credit = 0;
    if (!neighbors_.empty()) credit = std::min<std::size_t>(255, free_slots / neighbors_.size());
    message.credit = static_cast<std::uint8_t>(credit);
    reserved_ = credit * neighbors_.size();
    return message;
}

std::vector<TupleId> Node::drain_erased() { return std::exchange(erased_, {}); }

std::vector<Acceptance> Node::drain_acceptances() { return std::exchange(acceptances_, {}); }

void Node::dump(std::ostream& out) const {
    for (const auto& t : stored_) {
        out << id_ << ' ' << t.key.id << ' ' << t.key.hash << ' ' << static_cast<int>(t.value.annotation) << ' '
            << t.value.center.x() << ' ' << t.value.center.y() << ' ' << (t.value.consolidated ? 1 : 0) << '\n';
    }
}

}  // namespace annomesh::mesh
