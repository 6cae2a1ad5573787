#ifndef ANNOMESH_ENV_HPP
#define ANNOMESH_ENV_HPP

// Discrete-time world: agent kinematics, scene objects, viewing-frustum
// detection, communication graph and the simulated classifier.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "annomesh/ensemble.hpp"

namespace annomesh::env {

using Rng = std::mt19937_64;

/// Independent generator for one stream (agent, scene, ...) of a run.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct AgentPose {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double heading = 0.0;  // radians, counter-clockwise from +x

    bool operator==(const AgentPose& other) const {
        return position == other.position && heading == other.heading;
    }
};

/// Oriented box resting on the ground. The local +x axis (yaw) is the front
/// normal; dims are (depth along x, width along y, height).
struct Box {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d dims = Eigen::Vector3d::Ones();
    double yaw = 0.0;

    Eigen::Vector2d facing() const;
    /// Front face corners: bottom-left, bottom-right, top-left, top-right.
    std::array<Eigen::Vector3d, 4> front_corners() const;
    /// Center to the top front-right corner (right as seen by the box).
    Eigen::Vector3d front_right() const;
    /// Footprint test with the rectangle grown by `margin` on every side.
    bool footprint_contains(const Eigen::Vector2d& point, double margin = 0.0) const;
    Eigen::Vector2d closest_footprint_point(const Eigen::Vector2d& point) const;
    double footprint_radius() const;
};

struct SceneObject {
    int id = 0;
    int true_class = 0;
    Box box;
};

struct Scene {
    double arena_size = 8.0;  // square arena [0, size]^2
    std::vector<SceneObject> objects;
};

struct FrustumSpec {
    double near = 0.2;
    double far = 1.5;
    double horizontal_fov = std::numbers::pi / 3;
    double vertical_fov = std::numbers::pi / 3;
    double mount_height = 0.2;

    void validate() const;
};

struct MotionParams {
    double speed = 0.05;  // m/s
    double dt = 0.1;      // s per step
    double robot_radius = 0.05;
    double proximity_range = 0.1;  // obstacle sensing beyond the body
    double turn_jitter = 0.5;      // rad, std of the noise added when turning away
    double heading_noise = 0.0;    // rad per step in open space

    void validate() const;
};

struct SceneParams {
    double arena_size = 8.0;
    int object_count = 40;
    int class_count = 13;
    double clearance = 0.35;  // free gap between object footprints
    double wall_margin = 0.5;
    Eigen::Vector3d min_dims{0.2, 0.2, 0.15};
    Eigen::Vector3d max_dims{0.5, 0.6, 0.35};
};

/// One motion increment of the diffusion policy. Turns away from nearby
/// walls, boxes and agents (heading reflected off the summed repulsion); a
/// move that would leave the arena or enter a box is replaced by a turn.
AgentPose diffusion_step(const AgentPose& pose, const Scene& scene, std::span<const AgentPose> others,
                         const MotionParams& motion, Rng& rng);

/// Symmetric adjacency lists; i and j are linked iff their distance is <= range.
std::vector<std::vector<std::size_t>> neighbor_graph(std::span<const AgentPose> poses, double range);

bool inside_frustum(const AgentPose& pose, const FrustumSpec& frustum, const Eigen::Vector3d& point);

/// True when the front face looks toward the sensor and all four front
/// corners fall inside the frustum.
bool detectable(const AgentPose& pose, const FrustumSpec& frustum, const Box& box);

/// Index of the nearest detectable object, if any.
std::optional<std::size_t> frustum_detect(const AgentPose& pose, const FrustumSpec& frustum, const Scene& scene);

/// The true class with its accuracy, otherwise a uniformly drawn other class.
int classifier_sample(int true_class, const ensemble::ClassModel& model, Rng& rng);

Scene generate_scene(const SceneParams& params, std::uint64_t seed);
/// Lines of `id class cx cy cz dx dy dz yaw`; '#' starts a comment.
Scene load_scene(std::istream& in, double arena_size);
void save_scene(std::ostream& out, const Scene& scene);

/// Random collision-free poses inside the arena.
std::vector<AgentPose> place_agents(std::size_t count, const Scene& scene, const MotionParams& motion, Rng& rng);

bool pose_is_free(const Eigen::Vector2d& position, const Scene& scene, const MotionParams& motion);

}  // namespace annomesh::env

#endif  // ANNOMESH_ENV_HPP
