#include <doctest.h>

#include <random>

#include "annomesh/mesh/wire.hpp"
#include "wire_gen.hpp"

using namespace annomesh::mesh;
using namespace wiregen;

TEST_CASE("empty message is a 9 byte header") {
    MeshMessage m{0x1234, 0xA0B0C0D0, 7, {}, {}};
    const auto bytes = wire::encode(m);
    REQUIRE(bytes.size() == 9);
    // Little-endian fields.
    CHECK(std::to_integer<int>(bytes[0]) == 0x34);
    CHECK(std::to_integer<int>(bytes[1]) == 0x12);
    CHECK(std::to_integer<int>(bytes[2]) == 0xD0);
    CHECK(std::to_integer<int>(bytes[5]) == 0xA0);
    CHECK(std::to_integer<int>(bytes[6]) == 7);
    CHECK(wire::decode(bytes) == m);
}

TEST_CASE("round trip of randomized messages") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const MeshMessage m = random_message(rng);
        const auto bytes = wire::encode(m);
        CHECK(bytes.size() == layout_size(m));
        CHECK(bytes.size() == wire::encoded_size(m));
        CHECK(wire::decode(bytes) == m);
    }
}

TEST_CASE("decoder rejects bad input") {
    std::mt19937_64 rng(9);
    MeshMessage m = random_message(rng);
    m.requests.emplace_back(GetRequest{1, 2, 0, 0, 0});
    auto bytes = wire::encode(m);

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(wire::decode(truncated), wire::DecodeError);

    auto padded = bytes;
    padded.push_back(std::byte{0});
    CHECK_THROWS_AS(wire::decode(padded), wire::DecodeError);

    // Unknown request kind right after the header.
    MeshMessage one{1, 1, 0, {GetRequest{1, 2, 0, 0, 0}}, {}};
    auto kind = wire::encode(one);
    kind[9] = std::byte{9};
    CHECK_THROWS_AS(wire::decode(kind), wire::DecodeError);
}

TEST_CASE("oversized sections are refused") {
    MeshMessage m;
    EraseRequest e;
    e.keep.assign(256, 1);
    m.requests.emplace_back(e);
    CHECK_THROWS_AS(wire::encode(m), std::length_error);
}
