#ifndef ANNOMESH_MESH_TUPLE_HPP
#define ANNOMESH_MESH_TUPLE_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "annomesh/ensemble.hpp"

namespace annomesh::mesh {

using AgentId = std::uint16_t;
using TupleId = std::uint32_t;
using TupleHash = std::uint16_t;
using QueryId = std::uint32_t;
using NodeId = std::uint32_t;
using ClassId = std::uint8_t;
using Step = std::int64_t;

/// Recipient value for entries that every neighbor should process.
inline constexpr AgentId kBroadcast = 0xFFFF;

/// Location match tolerance on box centers (meters).
inline constexpr float kLocationEpsilon = 1e-6f;

/// Creator id in the high 16 bits, creator's running count in the low 16.
constexpr TupleId make_tuple_id(AgentId creator, std::uint16_t count) {
    return (static_cast<TupleId>(creator) << 16) | count;
}
constexpr AgentId tuple_creator(TupleId id) { return static_cast<AgentId>(id >> 16); }

struct TupleKey {
    TupleId id = 0;
    TupleHash hash = 0;

    bool operator==(const TupleKey&) const = default;
};

/// Annotated 3D bounding box. Geometry is kept in single precision, which is
/// what travels on the wire.
struct TupleValue {
    ClassId annotation = 0;
    bool consolidated = false;
    Eigen::Vector3f center = Eigen::Vector3f::Zero();
    float yaw = 0.0f;
    Eigen::Vector3f front_right = Eigen::Vector3f::Zero();  // center -> front-right corner

    bool operator==(const TupleValue& other) const {
        return annotation == other.annotation && consolidated == other.consolidated && center == other.center &&
               yaw == other.yaw && front_right == other.front_right;
    }
};

struct Tuple {
    TupleKey key;
    TupleValue value;

    bool operator==(const Tuple&) const = default;
};

/// True when the box center lies within r of (x, y), with kLocationEpsilon slack.
bool within(const TupleValue& value, float x, float y, float r);

/// delta = available * neighbors, or 1 for an isolated agent.
NodeId node_id(std::size_t available, std::size_t neighbor_count);

/// Staircase hash increasing with annotation uncertainty.
///
/// Classes are ranked by 1 - accuracy (most accurate first, ties by class
/// index); a raw annotation of rank r hashes to step * (1 + r). Consolidated
/// annotations hash to 0.
class UncertaintyHash {
public:
    UncertaintyHash(const ensemble::ClassModel& model, TupleHash step);

    TupleHash operator()(ClassId annotation, bool consolidated = false) const;
    TupleHash step() const { return step_; }
    TupleHash max_bucket() const;

private:
    std::vector<TupleHash> bucket_;
    TupleHash step_;
};

}  // namespace annomesh::mesh

#endif  // ANNOMESH_MESH_TUPLE_HPP
