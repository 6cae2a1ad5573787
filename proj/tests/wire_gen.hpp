#pragma once

// Random messages and an independent size table for wire round trips.

#include <random>

#include "annomesh/mesh/wire.hpp"

namespace wiregen {

using namespace annomesh::mesh;

inline Tuple random_tuple(std::mt19937_64& rng) {
    std::uniform_real_distribution<float> coord(-10.f, 10.f);
    Tuple t;
    t.key.id = static_cast<TupleId>(rng());
    t.key.hash = static_cast<TupleHash>(rng());
    t.value.annotation = static_cast<ClassId>(rng());
    t.value.consolidated = rng() & 1;
    t.value.center = {coord(rng), coord(rng), coord(rng)};
    t.value.yaw = coord(rng);
    t.value.front_right = {coord(rng), coord(rng), coord(rng)};
    return t;
}

inline MeshMessage random_message(std::mt19937_64& rng) {
    MeshMessage m;
    m.sender = static_cast<AgentId>(rng());
    m.node_id = static_cast<NodeId>(rng());
    m.credit = static_cast<std::uint8_t>(rng());
    const int requests = static_cast<int>(rng() % 12);
    for (int i = 0; i < requests; ++i) {
        switch (rng() % 3) {
            case 0:
                m.requests.emplace_back(StoreRequest{static_cast<AgentId>(rng()), static_cast<std::uint16_t>(rng()),
                                                     random_tuple(rng)});
                break;
            case 1:
                m.requests.emplace_back(GetRequest{static_cast<QueryId>(rng()), static_cast<AgentId>(rng()), 1.5f,
                                                   -2.25f, static_cast<float>(rng() % 100) / 7}); break;
            default: {
                EraseRequest e{static_cast<QueryId>(rng()), static_cast<AgentId>(rng()), 0.5f, 3.0f, 0.0f, {}};
                const int keep = static_cast<int>(rng() % 5);
                for (int k = 0; k < keep; ++k) e.keep.push_back(static_cast<TupleId>(rng()));
                m.requests.emplace_back(std::move(e));
            }
        }
    }
    const int replies = static_cast<int>(rng() % 8);
    for (int i = 0; i < replies; ++i)
        m.replies.push_back({static_cast<AgentId>(rng()), static_cast<QueryId>(rng()), random_tuple(rng)});
    return m;
}

// Byte count from the documented layout, independent of the library constants.
inline std::size_t layout_size(const MeshMessage& m) {
    std::size_t size = 9;
    for (const auto& r : m.requests) {
        if (std::holds_alternative<StoreRequest>(r)) size += 41;
        else if (std::holds_alternative<GetRequest>(r)) size += 19;
        else size += 20 + 4 * std::get<EraseRequest>(r).keep.size();
    }
    return size + 42 * m.replies.size();
}

}  // namespace wiregen
