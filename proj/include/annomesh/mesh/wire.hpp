#ifndef ANNOMESH_MESH_WIRE_HPP
#define ANNOMESH_MESH_WIRE_HPP

// Mesh messages and their byte layout. All fields are little-endian.
//
//   header   sender u16 | node_id u32 | credit u8 | n_requests u8 | n_replies u8     (9 bytes)
//   tuple    id u32 | hash u16 | class u8 | consolidated u8 | 7 x f32                (36 bytes)
//            geometry order: center x y z, yaw, front_right x y z
//   request  kind u8, then
//              store  recipient u16 | age u16 | tuple                              (41 bytes)
//              get    query u32 | origin u16 | x f32 | y f32 | r f32                (19 bytes)
//              erase  query u32 | origin u16 | x f32 | y f32 | r f32 | n_keep u8
//                     | keep u32 x n_keep                                         (20 + 4 n_keep)
//   reply    recipient u16 | query u32 | tuple                                     (42 bytes)
//
// Requests follow the header, then replies.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "annomesh/mesh/tuple.hpp"

namespace annomesh::mesh {

struct StoreRequest {
    AgentId recipient = kBroadcast;
    std::uint16_t age = 0;  // steps since the request was issued
    Tuple tuple;

    bool operator==(const StoreRequest&) const = default;
};

struct GetRequest {
    QueryId query = 0;
    AgentId origin = 0;
    float x = 0, y = 0, r = 0;

    bool operator==(const GetRequest&) const = default;
};

struct EraseRequest {
    QueryId query = 0;
    AgentId origin = 0;
    float x = 0, y = 0, r = 0;
    std::vector<TupleId> keep;

    bool operator==(const EraseRequest&) const = default;
};

using Request = std::variant<StoreRequest, GetRequest, EraseRequest>;

struct Reply {
    AgentId recipient = 0;
    QueryId query = 0;
    Tuple tuple;

    bool operator==(const Reply&) const = default;
};

struct MeshMessage {
    AgentId sender = 0;
    NodeId node_id = 0;
    std::uint8_t credit = 0;  // store requests each neighbor may forward to the sender next step
    std::vector<Request> requests;
    std::vector<Reply> replies;

    bool operator==(const MeshMessage&) const = default;
};

namespace wire {

inline constexpr std::size_t kHeaderBytes = 9;
inline constexpr std::size_t kTupleBytes = 36;
inline constexpr std::size_t kStoreBytes = 1 + 2 + 2 + kTupleBytes;
inline constexpr std::size_t kGetBytes = 1 + 4 + 2 + 12;
inline constexpr std::size_t kEraseBaseBytes = 1 + 4 + 2 + 12 + 1;
inline constexpr std::size_t kReplyBytes = 2 + 4 + kTupleBytes;
inline constexpr std::size_t kMaxEntries = 255;

enum class Kind : std::uint8_t { Store = 0, Get = 1, Erase = 2 };

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::size_t size_of(const Request& request);
inline std::size_t size_of(const Reply&) { return kReplyBytes; }

/// Byte count of `message` on the wire, computed from the layout table.
std::size_t encoded_size(const MeshMessage& message);

/// Throws std::length_error when a section holds more than kMaxEntries
/// entries or an erase keeps more than 255 ids.
std::vector<std::byte> encode(const MeshMessage& message);

/// Throws DecodeError on truncated, oversized or malformed input.
MeshMessage decode(std::span<const std::byte> bytes);

}  // namespace wire

}  // namespace annomesh::mesh

#endif  // ANNOMESH_MESH_WIRE_HPP
