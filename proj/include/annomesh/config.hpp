#ifndef ANNOMESH_CONFIG_HPP
#define ANNOMESH_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "annomesh/ensemble.hpp"
#include "annomesh/env.hpp"
#include "annomesh/mesh/node.hpp"

namespace annomesh {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a simulation run needs besides its seed.
struct SimConfig {
    std::size_t agents = 30;
    double comm_range = 2.0;
    std::uint64_t scene_seed = 5;
    std::string scene_file;  // empty: generate from scene_seed

    int recording_timeout = 100;  // steps
    int querying_timeout = 50;
    int reply_wait = 30;
    int min_votes = 3;
    // A tuple held this long without a query on its location gets one, so
    // lone leftovers and duplicate consolidations are eventually cleaned.
    int revisit_after = 300;

    mesh::MeshParams mesh;
    mesh::TupleHash hash_step = 5;

    env::MotionParams motion;
    bool motion_enabled = true;
    env::FrustumSpec frustum;
    env::SceneParams scene;
    ensemble::ClassModel classes = ensemble::ClassModel::scenenn_bga_dgcnn();

    int audit_every = 1;  // 0 disables the invariant audit

    int ticks_per_second() const;
    void validate() const;  // throws ConfigError
};

/// Reads `key = value` lines ('#' comments) over the defaults. Unknown keys
/// and malformed values raise ConfigError.
///
/// Keys: agents comm_range arena_size scene_seed scene_file object_count
/// recording_timeout querying_timeout reply_wait min_votes revisit_after
/// memory_capacity
/// storage_capacity reply_capacity store_ttl reply_ttl flood_ttl seen_ttl
/// bandwidth_cap hash_step speed dt robot_radius proximity_range turn_jitter
/// heading_noise motion_enabled frustum_near frustum_far frustum_hfov_deg
/// frustum_vfov_deg frustum_mount_height audit_every class_accuracy
/// (class_accuracy = name:p,name:p,...).
SimConfig parse_config(std::istream& in, SimConfig base = {});
SimConfig load_config(const std::string& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const SimConfig& config);

}  // namespace annomesh

#endif  // ANNOMESH_CONFIG_HPP
