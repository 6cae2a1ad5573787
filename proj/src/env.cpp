#include "annomesh/env.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace annomesh::env {

namespace {

Eigen::Vector2d unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

Eigen::Vector2d to_local(const Box& box, const Eigen::Vector2d& point) {
    const Eigen::Rotation2Dd inverse(-box.yaw);
    return inverse * (point - box.center.head<2>());
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    return Rng(seq);
}

Eigen::Vector2d Box::facing() const { return unit(yaw); }

std::array<Eigen::Vector3d, 4> Box::front_corners() const {
    const Eigen::Rotation2Dd rot(yaw);
    const double half_depth = dims.x() / 2;
    const double half_width = dims.y() / 2;
    const double bottom = center.z() - dims.z() / 2;
    const double top = center.z() + dims.z() / 2;
    const Eigen::Vector2d left = center.head<2>() + rot * Eigen::Vector2d(half_depth, half_width);
    const Eigen::Vector2d right = center.head<2>() + rot * Eigen::Vector2d(half_depth, -half_width);
    return {Eigen::Vector3d(left.x(), left.y(), bottom), Eigen::Vector3d(right.x(), right.y(), bottom),
            Eigen::Vector3d(left.x(), left.y(), top), Eigen::Vector3d(right.x(), right.y(), top)};
}

Eigen::Vector3d Box::front_right() const {
    const Eigen::Vector2d xy = Eigen::Rotation2Dd(yaw) * Eigen::Vector2d(dims.x() / 2, -dims.y() / 2);
    return {xy.x(), xy.y(), dims.z() / 2};
}

bool Box::footprint_contains(const Eigen::Vector2d& point, double margin) const {
    const Eigen::Vector2d local = to_local(*this, point);
    return std::abs(local.x()) <= dims.x() / 2 + margin && std::abs(local.y()) <= dims.y() / 2 + margin;
}

Eigen::Vector2d Box::closest_footprint_point(const Eigen::Vector2d& point) const {
    Eigen::Vector2d local = to_local(*this, point);
    local.x() = std::clamp(local.x(), -dims.x() / 2, dims.x() / 2);
    local.y() = std::clamp(local.y(), -dims.y() / 2, dims.y() / 2);
    return center.head<2>() + Eigen::Rotation2Dd(yaw) * local;
}

double Box::footprint_radius() const { return dims.head<2>().norm() / 2; }

void FrustumSpec::validate() const {
    if (!(near >= 0 && near < far)) throw std::invalid_argument("frustum: need 0 <= near < far");
    if (!(horizontal_fov > 0 && horizontal_fov < std::numbers::pi && vertical_fov > 0 &&
          vertical_fov < std::numbers::pi))
        throw std::invalid_argument("frustum: fields of view must lie in (0, pi)");
}

void MotionParams::validate() const {
    if (!(speed > 0 && dt > 0 && robot_radius > 0 && proximity_range >= 0 && turn_jitter >= 0 && heading_noise >= 0))
        throw std::invalid_argument("motion: parameters must be positive");
}

bool pose_is_free(const Eigen::Vector2d& p, const Scene& scene, const MotionParams& motion) {
    const double r = motion.robot_radius;
    if (p.x() < r || p.y() < r || p.x() > scene.arena_size - r || p.y() > scene.arena_size - r) return false;
    for (const auto& object : scene.objects)
        if (object.box.footprint_contains(p, r)) return false;
    return true;
}

AgentPose diffusion_step(const AgentPose& pose, const Scene& scene, std::span<const AgentPose> others,
                         const MotionParams& motion, Rng& rng) {
    const Eigen::Vector2d& p = pose.position;
    const double r = motion.robot_radius;
    const double sense = r + motion.proximity_range;

    Eigen::Vector2d repulsion = Eigen::Vector2d::Zero();
    if (p.x() < sense) repulsion.x() += 1;
    if (p.y() < sense) repulsion.y() += 1;
    if (p.x() > scene.arena_size - sense) repulsion.x() -= 1;
    if (p.y() > scene.arena_size - sense) repulsion.y() -= 1;
    for (const auto& object : scene.objects) {
        const Eigen::Vector2d away = p - object.box.closest_footprint_point(p);
        const double d = away.norm();
        if (d > 0 && d < sense) repulsion += away / d;
    }
    for (const auto& other : others) {
        const Eigen::Vector2d away = p - other.position;
        const double d = away.norm();
        if (d > 0 && d < 2 * r + motion.proximity_range) repulsion += away / d;
    }

    AgentPose next = pose;
    Eigen::Vector2d direction = unit(pose.heading);
    if (repulsion.squaredNorm() > 0 && direction.dot(repulsion) < 0) {
        const Eigen::Vector2d normal = repulsion.normalized();
        direction -= 2 * direction.dot(normal) * normal;
        next.heading = std::atan2(direction.y(), direction.x());
        if (motion.turn_jitter > 0) next.heading += std::normal_distribution<double>(0.0, motion.turn_jitter)(rng);
    } else if (motion.heading_noise > 0) {
        next.heading += std::normal_distribution<double>(0.0, motion.heading_noise)(rng);
    }
    next.heading = std::remainder(next.heading, 2 * std::numbers::pi);

    const Eigen::Vector2d target = p + motion.speed * motion.dt * unit(next.heading);
    if (pose_is_free(target, scene, motion)) {
        next.position = target;
    } else {
        // Blocked: stay put and turn somewhere in the back half-plane.
        const double turn = std::uniform_real_distribution<double>(std::numbers::pi / 2, 3 * std::numbers::pi / 2)(rng);
        next.heading = std::remainder(next.heading + turn, 2 * std::numbers::pi);
    }
    return next;
}

std::vector<std::vector<std::size_t>> neighbor_graph(std::span<const AgentPose> poses, double range) {
    std::vector<std::vector<std::size_t>> adjacency(poses.size());
    const double range2 = range * range;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        for (std::size_t j = i + 1; j < poses.size(); ++j) {
            if ((poses[i].position - poses[j].position).squaredNorm() <= range2) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }
    }
    return adjacency;
}

bool inside_frustum(const AgentPose& pose, const FrustumSpec& frustum, const Eigen::Vector3d& point) {
    const Eigen::Vector2d rel = point.head<2>() - pose.position;
    const Eigen::Vector2d ahead = unit(pose.heading);
    const double forward = rel.dot(ahead);
    const double lateral = ahead.x() * rel.y() - ahead.y() * rel.x();
    const double vertical = point.z() - frustum.mount_height;
    if (forward < frustum.near || forward > frustum.far) return false;
    return std::abs(lateral) <= forward * std::tan(frustum.horizontal_fov / 2) &&
           std::abs(vertical) <= forward * std::tan(frustum.vertical_fov / 2);
}

bool detectable(const AgentPose& pose, const FrustumSpec& frustum, const Box& box) {
    const auto corners = box.front_corners();
    const Eigen::Vector2d face_center = (corners[0].head<2>() + corners[1].head<2>()) / 2;
    if (box.facing().dot(pose.position - face_center) <= 0) return false;
    for (const auto& corner : corners)
        if (!inside_frustum(pose, frustum, corner)) return false;
    return true;
}

std::optional<std::size_t> frustum_detect(const AgentPose& pose, const FrustumSpec& frustum, const Scene& scene) {
    std::optional<std::size_t> nearest;
    double best = std::numeric_limits<double>::infinity();
    // Farthest visible ground distance is at the edge of the field of view.
    const double reach = frustum.far / std::cos(frustum.horizontal_fov / 2);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const Box& box = scene.objects[i].box;
        const double d = (box.center.head<2>() - pose.position).squaredNorm();
        if (d >= best || d > (reach + box.footprint_radius()) * (reach + box.footprint_radius())) continue;
        if (detectable(pose, frustum, box)) {
            best = d;
            nearest = i;
        }
    }
    return nearest;
}

int classifier_sample(int true_class, const ensemble::ClassModel& model, Rng& rng) {
    const int c = model.class_count();
    if (true_class < 0 || true_class >= c) throw std::out_of_range("classifier: unknown class");
    const double p = model.accuracy[static_cast<std::size_t>(true_class)];
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p) return true_class;
    const int other = std::uniform_int_distribution<int>(0, c - 2)(rng);
    return other < true_class ? other : other + 1;
}

Scene generate_scene(const SceneParams& params, std::uint64_t seed) {
    if (params.object_count < 1 || params.class_count < 1) throw std::invalid_argument("scene: need objects and classes");
    Rng rng = make_rng(seed, 0xC0FFEE);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // Four rooms (quadrants) with uneven shares of the furniture.
    const double half = params.arena_size / 2;
    const std::array<Eigen::Vector2d, 4> rooms{Eigen::Vector2d(half / 2, half / 2), Eigen::Vector2d(3 * half / 2, half / 2),
                                               Eigen::Vector2d(half / 2, 3 * half / 2),
                                               Eigen::Vector2d(3 * half / 2, 3 * half / 2)};
    std::discrete_distribution<int> pick_room({0.35, 0.3, 0.2, 0.15});

    std::vector<int> classes(static_cast<std::size_t>(params.object_count));
    for (int i = 0; i < params.object_count; ++i)
        classes[static_cast<std::size_t>(i)] =
            i < params.class_count ? i : std::uniform_int_distribution<int>(0, params.class_count - 1)(rng);
    std::shuffle(classes.begin(), classes.end(), rng);

    Scene scene;
    scene.arena_size = params.arena_size;
    for (int i = 0; i < params.object_count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            const int room = attempt < 5000 ? pick_room(rng) : static_cast<int>(attempt % 4);
            const Eigen::Vector2d corner = rooms[static_cast<std::size_t>(room)] - Eigen::Vector2d(half / 2, half / 2);
            Box box;
            for (int k = 0; k < 3; ++k) box.dims[k] = params.min_dims[k] + u01(rng) * (params.max_dims[k] - params.min_dims[k]);
            const double lo = params.wall_margin;
            box.center.x() = corner.x() + lo + u01(rng) * (half - 2 * lo);
            box.center.y() = corner.y() + lo + u01(rng) * (half - 2 * lo);
            box.center.z() = box.dims.z() / 2;
            const Eigen::Vector2d toward = rooms[static_cast<std::size_t>(room)] - box.center.head<2>();
            box.yaw = toward.norm() > 1e-9 ? std::atan2(toward.y(), toward.x()) : 2 * std::numbers::pi * u01(rng);
            // Quantize to single precision: centers travel as f32 and must compare exactly.
            for (int k = 0; k < 3; ++k) box.center[k] = static_cast<float>(box.center[k]);

            bool clear = box.center.x() - box.footprint_radius() > params.wall_margin / 2 &&
                         box.center.y() - box.footprint_radius() > params.wall_margin / 2 &&
                         box.center.x() + box.footprint_radius() < params.arena_size - params.wall_margin / 2 &&
                         box.center.y() + box.footprint_radius() < params.arena_size - params.wall_margin / 2;
            for (const auto& other : scene.objects) {
                if (!clear) break;
                const double gap = (other.box.center.head<2>() - box.center.head<2>()).norm() -
                                   other.box.footprint_radius() - box.footprint_radius();
                clear = gap >= params.clearance;
            }
            if (clear) {
                scene.objects.push_back({i, classes[static_cast<std::size_t>(i)], box});
                placed = true;
            }
        }
        if (!placed) throw std::runtime_error("scene: could not place all objects without overlap");
    }
    return scene;
}

Scene load_scene(std::istream& in, double arena_size) {
    Scene scene;
    scene.arena_size = arena_size;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        SceneObject object;
        if (!(fields >> object.id)) continue;  // blank
        Box& b = object.box;
        if (!(fields >> object.true_class >> b.center.x() >> b.center.y() >> b.center.z() >> b.dims.x() >> b.dims.y() >>
              b.dims.z() >> b.yaw))
            throw std::runtime_error("scene: malformed line " + std::to_string(line_no));
        std::string extra;
        if (fields >> extra) throw std::runtime_error("scene: trailing fields on line " + std::to_string(line_no));
        for (int k = 0; k < 3; ++k) b.center[k] = static_cast<float>(b.center[k]);
        if ((b.dims.array() <= 0).any()) throw std::runtime_error("scene: nonpositive box size on line " + std::to_string(line_no));
        scene.objects.push_back(object);
    }
    return scene;
}

void save_scene(std::ostream& out, const Scene& scene) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "# id class cx cy cz dx dy dz yaw\n";
    for (const auto& o : scene.objects) {
        const Box& b = o.box;
        out << o.id << ' ' << o.true_class << ' ' << b.center.x() << ' ' << b.center.y() << ' ' << b.center.z() << ' '
            << b.dims.x() << ' ' << b.dims.y() << ' ' << b.dims.z() << ' ' << b.yaw << '\n';
    }
    out.precision(old_precision);
}

std::vector<AgentPose> place_agents(std::size_t count, const Scene& scene, const MotionParams& motion, Rng& rng) {
    std::uniform_real_distribution<double> coord(0.0, scene.arena_size);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<AgentPose> poses;
    poses.reserve(count);
    for (std::size_t attempt = 0; poses.size() < count; ++attempt) {
        if (attempt > 1000 * (count + 1)) throw std::runtime_error("place_agents: arena too crowded");
        const Eigen::Vector2d p(coord(rng), coord(rng));
        if (!pose_is_free(p, scene, motion)) continue;
        bool clear = true;
        for (const auto& other : poses) clear = clear && (other.position - p).norm() >= 2 * motion.robot_radius;
        if (clear) poses.push_back({p, angle(rng)});
    }
    return poses;
}

}  // namespace annomesh::env
