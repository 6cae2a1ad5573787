#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "annomesh/env.hpp"

using namespace annomesh;
using namespace annomesh::env;

namespace {

// Angle-based restatement of the viewing volume.
bool in_view(const AgentPose& pose, const FrustumSpec& f, const Eigen::Vector3d& p) {
    const double dx = p.x() - pose.position.x(), dy = p.y() - pose.position.y();
    const double c = std::cos(pose.heading), s = std::sin(pose.heading);
    const double forward = c * dx + s * dy;
    const double lateral = -s * dx + c * dy;
    if (forward < f.near - 1e-12 || forward > f.far + 1e-12) return false;
    return std::abs(std::atan2(lateral, forward)) <= f.horizontal_fov / 2 + 1e-9 &&
           std::abs(std::atan2(p.z() - f.mount_height, forward)) <= f.vertical_fov / 2 + 1e-9;
}

bool sees(const AgentPose& pose, const FrustumSpec& f, const Box& b) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const Eigen::Vector2d face = b.center.head<2>() + Eigen::Vector2d(c, s) * b.dims.x() / 2;
    if ((pose.position - face).dot(Eigen::Vector2d(c, s)) <= 0) return false;
    for (double side : {-1.0, 1.0})
        for (double up : {-1.0, 1.0}) {
            const Eigen::Vector2d xy = face + Eigen::Vector2d(-s, c) * side * b.dims.y() / 2;
            if (!in_view(pose, f, {xy.x(), xy.y(), b.center.z() + up * b.dims.z() / 2})) return false;
        }
    return true;
}

std::array<Eigen::Vector2d, 4> footprint(const Box& b) {
    const Eigen::Vector2d u(std::cos(b.yaw), std::sin(b.yaw)), v(-u.y(), u.x());
    const Eigen::Vector2d c = b.center.head<2>();
    const double hx = b.dims.x() / 2, hy = b.dims.y() / 2;
    return {c + hx * u + hy * v, c + hx * u - hy * v, c - hx * u - hy * v, c - hx * u + hy * v};
}

// Separating axis test for two rectangles.
bool overlap(const Box& a, const Box& b) {
    const auto pa = footprint(a), pb = footprint(b);
    for (const Box* box : {&a, &b})
        for (double yaw : {box->yaw, box->yaw + std::numbers::pi / 2}) {
            const Eigen::Vector2d axis(std::cos(yaw), std::sin(yaw));
            double amin = 1e9, amax = -1e9, bmin = 1e9, bmax = -1e9;
            for (const auto& p : pa) amin = std::min(amin, p.dot(axis)), amax = std::max(amax, p.dot(axis));
            for (const auto& p : pb) bmin = std::min(bmin, p.dot(axis)), bmax = std::max(bmax, p.dot(axis));
            if (amax < bmin || bmax < amin) return false;
        }
    return true;
}

}  // namespace

TEST_CASE("open space motion is a straight line") {
    Scene scene;
    scene.arena_size = 10;
    MotionParams m;
    m.turn_jitter = 0;
    Rng rng(1);
    AgentPose pose{{2, 5}, 0};
    for (int s = 0; s < 100; ++s) pose = diffusion_step(pose, scene, {}, m, rng);
    CHECK(pose.position.x() == doctest::Approx(2 + 100 * m.speed * m.dt));
    CHECK(pose.position.y() == doctest::Approx(5));
    CHECK(pose.heading == 0);
}

TEST_CASE("diffusion stays in the free space and reaches every quadrant") {
    SceneParams sp;
    const Scene scene = generate_scene(sp, 3);
    MotionParams m;
    Rng rng(9);
    auto poses = place_agents(1, scene, m, rng);
    AgentPose pose = poses[0];
    std::set<int> quadrants;
    const double half = scene.arena_size / 2;
    for (int s = 0; s < 100000; ++s) {
        pose = diffusion_step(pose, scene, {}, m, rng);
        REQUIRE(pose_is_free(pose.position, scene, m));
        REQUIRE(pose.position.x() >= 0);
        REQUIRE(pose.position.x() <= scene.arena_size);
        quadrants.insert((pose.position.x() > half) + 2 * (pose.position.y() > half));
    }
    CHECK(quadrants.size() == 4);
}

TEST_CASE("agents keep out of each other's bodies") {
    Scene scene;
    scene.arena_size = 3;
    MotionParams m;
    Rng rng(4);
    auto poses = place_agents(10, scene, m, rng);
    int contacts = 0;
    for (int s = 0; s < 5000; ++s) {
        std::vector<AgentPose> next;
        for (std::size_t i = 0; i < poses.size(); ++i) {
            std::vector<AgentPose> others;
            for (std::size_t j = 0; j < poses.size(); ++j)
                if (j != i) others.push_back(poses[j]);
            next.push_back(diffusion_step(poses[i], scene, others, m, rng));
        }
        poses = next;
        for (std::size_t i = 0; i < poses.size(); ++i)
            for (std::size_t j = i + 1; j < poses.size(); ++j)
                contacts += (poses[i].position - poses[j].position).norm() < m.robot_radius;
    }
    // Avoidance is soft; deep overlaps should stay rare.
    CHECK(contacts < 50);
}

TEST_CASE("neighbor graph is inclusive at the range and symmetric") {
    std::vector<AgentPose> poses{{{0, 0}, 0}, {{2, 0}, 0}, {{0, 2 + 1e-9}, 0}};
    auto g = neighbor_graph(poses, 2.0);
    CHECK(g[0] == std::vector<std::size_t>{1});
    CHECK(g[1] == std::vector<std::size_t>{0});
    CHECK(g[2].empty());
    auto g2 = neighbor_graph(poses, 2.0 - 1e-9);
    CHECK(g2[0].empty());

    Rng rng(3);
    std::uniform_real_distribution<double> u(0, 5);
    std::vector<AgentPose> many;
    for (int i = 0; i < 40; ++i) many.push_back({{u(rng), u(rng)}, 0});
    auto h = neighbor_graph(many, 1.3);
    for (std::size_t i = 0; i < many.size(); ++i) {
        for (std::size_t j = 0; j < many.size(); ++j) {
            const bool linked = std::count(h[i].begin(), h[i].end(), j) == 1;
            CHECK(linked == (i != j && (many[i].position - many[j].position).norm() <= 1.3));
        }
    }
}

TEST_CASE("frustum examples") {
    FrustumSpec f;
    Box box;
    box.center = {1.5, 0, 0.15};
    box.dims = {0.2, 0.2, 0.3};
    box.yaw = std::numbers::pi;  // facing the agent at the origin
    const AgentPose pose{{0.3, 0}, 0};
    CHECK(detectable(pose, f, box));
    const AgentPose behind{{0.3, 0}, std::numbers::pi};
    CHECK_FALSE(detectable(behind, f, box));
    // Looking at the back face.
    Box back = box;
    back.yaw = 0;
    CHECK_FALSE(detectable(pose, f, back));
    // Straddling the edge of the field of view.
    const AgentPose skewed{{0.3, 0}, f.horizontal_fov / 2};
    CHECK_FALSE(detectable(skewed, f, box));
    // Beyond the far plane.
    CHECK_FALSE(detectable(AgentPose{{-1.0, 0}, 0}, f, box));
}

TEST_CASE("detections agree with an independent geometric check") {
    const Scene scene = generate_scene(SceneParams{}, 7);
    FrustumSpec f;
    Rng rng(21);
    std::uniform_real_distribution<double> u(0, scene.arena_size), a(-std::numbers::pi, std::numbers::pi);
    int hits = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const AgentPose pose{{u(rng), u(rng)}, a(rng)};
        const auto found = frustum_detect(pose, f, scene);
        std::optional<std::size_t> expected;
        double best = 1e18;
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            if (!sees(pose, f, scene.objects[i].box)) continue;
            const double d = (scene.objects[i].box.center.head<2>() - pose.position).squaredNorm();
            if (d < best) best = d, expected = i;
        }
        CHECK(found.value_or(999) == expected.value_or(999));
        hits += found.has_value();
    }
    CHECK(hits > 100);
}

TEST_CASE("classifier draws") {
    const auto model = ensemble::ClassModel::scenenn_bga_dgcnn();
    Rng rng(8);
    ensemble::ClassModel perfect = model;
    for (auto& p : perfect.accuracy) p = 1.0;
    for (int c = 0; c < 13; ++c) CHECK(classifier_sample(c, perfect, rng) == c);

    const int chair = model.class_index("chair");
    const int draws = 100000;
    std::vector<int> counts(13, 0);
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(classifier_sample(chair, model, rng))];
    CHECK(std::abs(double(counts[static_cast<std::size_t>(chair)]) / draws - 0.926) < 0.005);
    // Wrong labels are uniform: chi-square with 11 dof, 0.999 quantile 31.26.
    const int wrong = draws - counts[static_cast<std::size_t>(chair)];
    double chi2 = 0;
    for (int c = 0; c < 13; ++c) {
        if (c == chair) continue;
        const double e = wrong / 12.0;
        chi2 += (counts[static_cast<std::size_t>(c)] - e) * (counts[static_cast<std::size_t>(c)] - e) / e;
    }
    CHECK(chi2 < 31.26);
    CHECK_THROWS(classifier_sample(13, model, rng));
}

TEST_CASE("generated scenes") {
    const SceneParams sp;
    const Scene a = generate_scene(sp, 5), b = generate_scene(sp, 5), c = generate_scene(sp, 6);
    REQUIRE(a.objects.size() == 40);
    std::set<int> classes;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        const auto& o = a.objects[i];
        classes.insert(o.true_class);
        CHECK(o.box.center == b.objects[i].box.center);
        CHECK(o.box.center.z() == doctest::Approx(o.box.dims.z() / 2).epsilon(1e-6));
        for (const auto& corner : footprint(o.box)) {
            CHECK(corner.x() > 0);
            CHECK(corner.y() < a.arena_size);
        }
        for (std::size_t j = i + 1; j < a.objects.size(); ++j) CHECK_FALSE(overlap(o.box, a.objects[j].box));
    }
    CHECK(classes.size() == 13);
    CHECK(a.objects[0].box.center != c.objects[0].box.center);
}

TEST_CASE("scene files round trip") {
    const Scene a = generate_scene(SceneParams{}, 2);
    std::stringstream text;
    save_scene(text, a);
    const Scene b = load_scene(text, a.arena_size);
    REQUIRE(b.objects.size() == a.objects.size());
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        CHECK(b.objects[i].id == a.objects[i].id);
        CHECK(b.objects[i].true_class == a.objects[i].true_class);
        CHECK(b.objects[i].box.center == a.objects[i].box.center);
        CHECK(b.objects[i].box.dims == a.objects[i].box.dims);
        CHECK(b.objects[i].box.yaw == a.objects[i].box.yaw);
    }
    std::istringstream bad("1 2 3 4\n");
    CHECK_THROWS(load_scene(bad, 8));
    std::istringstream comment("# nothing here\n\n");
    CHECK(load_scene(comment, 8).objects.empty());
}

TEST_CASE("independent rng streams") {
    Rng a = make_rng(1, 0), b = make_rng(1, 1), c = make_rng(1, 0);
    const auto x = a();
    CHECK(x == c());
    CHECK(x != b());
}
