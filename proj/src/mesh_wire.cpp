#include "annomesh/mesh/wire.hpp"

#include <bit>
#include <cstring>

namespace annomesh::mesh::wire {

namespace {

class Writer {
public:
    explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

    void u8(std::uint8_t v) { bytes_.push_back(std::byte{v}); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v));
        u16(static_cast<std::uint16_t>(v >> 16));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void tuple(const Tuple& t) {
        u32(t.key.id);
        u16(t.key.hash);
        u8(t.value.annotation);
        u8(t.value.consolidated ? 1 : 0);
        for (int i = 0; i < 3; ++i) f32(t.value.center[i]);
        f32(t.value.yaw);
        for (int i = 0; i < 3; ++i) f32(t.value.front_right[i]);
    }

    std::vector<std::byte> take() { return std::move(bytes_); }

private:
    std::vector<std::byte> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        if (pos_ >= bytes_.size()) throw DecodeError("mesh message truncated");
        return std::to_integer<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint16_t u16() {
        const std::uint16_t lo = u8();
        return static_cast<std::uint16_t>(lo | (u8() << 8));
    }
    std::uint32_t u32() {
        const std::uint32_t lo = u16();
        return lo | (static_cast<std::uint32_t>(u16()) << 16);
    }
    float f32() { return std::bit_cast<float>(u32()); }

    Tuple tuple() {
        Tuple t;
        t.key.id = u32();
        t.key.hash = u16();
        t.value.annotation = u8();
        const std::uint8_t flag = u8();
        if (flag > 1) throw DecodeError("mesh message: bad consolidated flag");
        t.value.consolidated = flag == 1;
        for (int i = 0; i < 3; ++i) t.value.center[i] = f32();
        t.value.yaw = f32();
        for (int i = 0; i < 3; ++i) t.value.front_right[i] = f32();
        return t;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

struct EntrySize {
    std::size_t operator()(const StoreRequest&) const { return kStoreBytes; }
    std::size_t operator()(const GetRequest&) const { return kGetBytes; }
    std::size_t operator()(const EraseRequest& e) const { return kEraseBaseBytes + 4 * e.keep.size(); }
};

}  // namespace

std::size_t size_of(const Request& request) { return std::visit(EntrySize{}, request); }

std::size_t encoded_size(const MeshMessage& message) {
    std::size_t total = kHeaderBytes + kReplyBytes * message.replies.size();
    for (const auto& request : message.requests) total += size_of(request);
    return total;
}

std::vector<std::byte> encode(const MeshMessage& message) {
    if (message.requests.size() > kMaxEntries || message.replies.size() > kMaxEntries)
        throw std::length_error("mesh message: too many entries");

    Writer out(encoded_size(message));
    out.u16(message.sender);
    out.u32(message.node_id);
    out.u8(message.credit);
    out.u8(static_cast<std::uint8_t>(message.requests.size()));
    out.u8(static_cast<std::uint8_t>(message.replies.size()));

    for (const auto& request : message.requests) {
        if (const auto* store = std::get_if<StoreRequest>(&request)) {
            out.u8(static_cast<std::uint8_t>(Kind::Store));
            out.u16(store->recipient);
            out.u16(store->age);
            out.tuple(store->tuple);
        } else if (const auto* get = std::get_if<GetRequest>(&request)) {
            out.u8(static_cast<std::uint8_t>(Kind::Get));
            out.u32(get->query);
            out.u16(get->origin);
            out.f32(get->x);
            out.f32(get->y);
            out.f32(get->r);
        } else {
            const auto& erase = std::get<EraseRequest>(request);
            if (erase.keep.size() > 255) throw std::length_error("mesh message: erase keep list too long");
            out.u8(static_cast<std::uint8_t>(Kind::Erase));
            out.u32(erase.query);
            out.u16(erase.origin);
            out.f32(erase.x);
            out.f32(erase.y);
            out.f32(erase.r);
            out.u8(static_cast<std::uint8_t>(erase.keep.size()));
            for (TupleId id : erase.keep) out.u32(id);
        }
    }
    for (const auto& reply : message.replies) {
        out.u16(reply.recipient);
        out.u32(reply.query);
        out.tuple(reply.tuple);
    }
    return out.take();
}

MeshMessage decode(std::span<const std::byte> bytes) {
    Reader in(bytes);
    MeshMessage message;
    message.sender = in.u16();
    message.node_id = in.u32();
    message.credit = in.u8();
    const std::size_t n_requests = in.u8();
    const std::size_t n_replies = in.u8();

    message.requests.reserve(n_requests);
    for (std::size_t i = 0; i < n_requests; ++i) {
        switch (static_cast<Kind>(in.u8())) {
        case Kind::Store: {
            StoreRequest store;
            store.recipient = in.u16();
            store.age = in.u16();
            store.tuple = in.tuple();
            message.requests.emplace_back(std::move(store));
            break;
        }
        case Kind::Get: {
            GetRequest get;
            get.query = in.u32();
            get.origin = in.u16();
            get.x = in.f32();
            get.y = in.f32();
            get.r = in.f32();
            message.requests.emplace_back(get);
            break;
        }
        case Kind::Erase: {
            EraseRequest erase;
            erase.query = in.u32();
            erase.origin = in.u16();
            erase.x = in.f32();
            erase.y = in.f32();
            erase.r = in.f32();
            erase.keep.resize(in.u8());
            for (auto& id : erase.keep) id = in.u32();
            message.requests.emplace_back(std::move(erase));
            break;
        }
        default:
            throw DecodeError("mesh message: unknown request kind");
        }
    }
    message.replies.resize(n_replies);
    for (auto& reply : message.replies) {
        reply.recipient = in.u16();
        reply.query = in.u32();
        reply.tuple = in.tuple();
    }
    if (!in.done()) throw DecodeError("mesh message: trailing bytes");
    return message;
}

}  // namespace annomesh::mesh::wire
