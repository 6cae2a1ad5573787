#ifndef ANNOMESH_MESH_NODE_HPP
#define ANNOMESH_MESH_NODE_HPP

#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "annomesh/mesh/wire.hpp"

namespace annomesh::mesh {

struct MeshParams {
    std::size_t memory_capacity = 20;   // M_i, split into storage + routing
    std::size_t storage_capacity = 10;  // S_i
    std::size_t reply_capacity = 20;    // buffered replies (copies, may be dropped)
    int store_ttl = 50;                 // steps before a holder stores unconditionally
    int reply_ttl = 50;                 // steps a reply waits for its next hop
    int flood_ttl = 50;                 // steps an isolated agent holds a get/erase
    int seen_ttl = 600;                 // steps a flooded query id is remembered
    std::size_t bandwidth_cap = 1024;   // bytes per outbound message

    std::size_t routing_capacity() const { return memory_capacity - storage_capacity; }
    void validate() const;
};

enum class StoreOutcome { Stored, Queued, Deferred };

/// Emitted whenever a tuple enters storage.
struct Acceptance {
    TupleId id = 0;
    TupleHash hash = 0;
    NodeId node_id = 0;     // holder's NodeID at acceptance
    bool fallback = false;  // TTL expiry forced the store
};

struct QueryReplies {
    Step started = 0;
    Step last_reply = 0;
    std::vector<Tuple> tuples;  // distinct by tuple id
};

/// One agent's participation in the shared tuple store.
///
/// A step is driven as: receive() every inbound message, set_neighbors(),
/// any number of store()/get()/erase_except() calls, then route(), whose
/// result is broadcast to the neighbors.
///
/// Stores climb toward the neighbor of highest NodeID and are absorbed by the
/// first agent whose NodeID exceeds the tuple hash. Gets and erases flood with
/// duplicate suppression; replies retrace the flood tree hop by hop. A store
/// is only forwarded to a neighbor that advertised credit for it, so routing
/// queues never overflow.
class Node {
public:
    Node(AgentId id, MeshParams params);

    AgentId id() const { return id_; }
    const MeshParams& params() const { return params_; }

    void receive(const MeshMessage& message, Step now);

    void set_neighbors(std::vector<AgentId> neighbors);
    const std::vector<AgentId>& neighbors() const { return neighbors_; }

    /// m_i: free storage slots.
    std::size_t available() const { return params_.storage_capacity - stored_.size(); }
    NodeId node_id() const { return mesh::node_id(available(), neighbors_.size()); }

    /// Allocates the next unique tuple id for a tuple created here.
    TupleId next_tuple_id();

    /// Stores locally when NodeID > hash, otherwise queues for routing.
    /// Deferred when the routing queue has no room; retry next step.
    StoreOutcome store(const Tuple& tuple, Step now);
    /// Floods a location query; local matches are collected immediately.
    QueryId get(float x, float y, float r, Step now);
    /// Floods an erase of every tuple within r of (x, y) not listed in keep.
    QueryId erase_except(float x, float y, float r, std::vector<TupleId> keep, Step now);

    const QueryReplies* replies(QueryId query) const;
    void forget_query(QueryId query);

    MeshMessage route(Step now);

    const std::vector<Tuple>& stored() const { return stored_; }
    const std::vector<StoreRequest>& routing_queue() const { return queue_; }
    std::size_t reply_backlog() const { return replies_.size(); }
    /// Routing slots promised to neighbors and not yet filled.
    std::size_t reserved_slots() const { return reserved_; }
    bool has_routing_room() const { return queue_.size() + reserved_ < params_.routing_capacity(); }

    std::vector<TupleId> drain_erased();
    std::vector<Acceptance> drain_acceptances();
    std::size_t dropped_replies() const { return dropped_replies_; }

    /// One line per stored tuple: agent id hash class x y consolidated.
    void dump(std::ostream& out) const;

private:
    struct NeighborInfo {
        NodeId node_id = 0;
        std::uint8_t credit = 0;
        Step heard = -1;
    };
    struct PendingReply {
        Reply reply;
        int age = 0;
    };
    struct PendingFlood {
        Request request;  // GetRequest or EraseRequest
        QueryId query = 0;
        int age = 0;
    };

    void accept(const Tuple& tuple, bool fallback);
    void apply_erase(const EraseRequest& erase);
    void answer_get(const GetRequest& get, AgentId parent);
    void queue_reply(Reply reply);
    bool mark_seen(QueryId query, Step now);
    QueryId next_query_id();

    AgentId id_;
    MeshParams params_;
    std::vector<AgentId> neighbors_;
    std::map<AgentId, NeighborInfo> heard_;

    std::vector<Tuple> stored_;
    std::vector<StoreRequest> queue_;
    std::deque<PendingReply> replies_;
    std::vector<PendingFlood> floods_;

    std::map<QueryId, Step> seen_;
    std::map<QueryId, AgentId> parent_;
    std::map<QueryId, QueryReplies> own_queries_;

    std::size_t reserved_ = 0;
    std::uint16_t tuple_count_ = 0;
    std::uint16_t query_count_ = 0;
    bool tuple_ids_exhausted_ = false;

    std::vector<TupleId> erased_;
    std::vector<Acceptance> acceptances_;
    std::size_t dropped_replies_ = 0;
};

}  // namespace annomesh::mesh

#endif  // ANNOMESH_MESH_NODE_HPP
