#include "annomesh/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace annomesh {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value for '" + key + "': " + text);
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config: bad boolean for '" + key + "': " + text);
}

constexpr double kDegree = std::numbers::pi / 180.0;

// Shortest text that reads back to the same double.
std::string num(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

ensemble::ClassModel parse_classes(const std::string& text) {
    ensemble::ClassModel model;
    std::istringstream items(text);
    std::string item;
    while (std::getline(items, item, ',')) {
        item = trim(item);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("config: class_accuracy entries need name:p");
        model.names.push_back(trim(item.substr(0, colon)));
        model.accuracy.push_back(parse_number<double>("class_accuracy", trim(item.substr(colon + 1))));
    }
    return model;
}

using Setter = std::function<void(SimConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"agents", [](SimConfig& c, const std::string& v) { c.agents = parse_number<std::size_t>("agents", v); }},
        {"comm_range", [](SimConfig& c, const std::string& v) { c.comm_range = parse_number<double>("comm_range", v); }},
        {"arena_size", [](SimConfig& c, const std::string& v) { c.scene.arena_size = parse_number<double>("arena_size", v); }},
        {"scene_seed", [](SimConfig& c, const std::string& v) { c.scene_seed = parse_number<std::uint64_t>("scene_seed", v); }},
        {"scene_file", [](SimConfig& c, const std::string& v) { c.scene_file = v; }},
        {"object_count", [](SimConfig& c, const std::string& v) { c.scene.object_count = parse_number<int>("object_count", v); }},
        {"recording_timeout", [](SimConfig& c, const std::string& v) { c.recording_timeout = parse_number<int>("recording_timeout", v); }},
        {"querying_timeout", [](SimConfig& c, const std::string& v) { c.querying_timeout = parse_number<int>("querying_timeout", v); }},
        {"reply_wait", [](SimConfig& c, const std::string& v) { c.reply_wait = parse_number<int>("reply_wait", v); }},
        {"min_votes", [](SimConfig& c, const std::string& v) { c.min_votes = parse_number<int>("min_votes", v); }},
        {"revisit_after", [](SimConfig& c, const std::string& v) { c.revisit_after = parse_number<int>("revisit_after", v); }},
        {"memory_capacity", [](SimConfig& c, const std::string& v) { c.mesh.memory_capacity = parse_number<std::size_t>("memory_capacity", v); }},
        {"storage_capacity", [](SimConfig& c, const std::string& v) { c.mesh.storage_capacity = parse_number<std::size_t>("storage_capacity", v); }},
        {"reply_capacity", [](SimConfig& c, const std::string& v) { c.mesh.reply_capacity = parse_number<std::size_t>("reply_capacity", v); }},
        {"store_ttl", [](SimConfig& c, const std::string& v) { c.mesh.store_ttl = parse_number<int>("store_ttl", v); }},
        {"reply_ttl", [](SimConfig& c, const std::string& v) { c.mesh.reply_ttl = parse_number<int>("reply_ttl", v); }},
        {"flood_ttl", [](SimConfig& c, const std::string& v) { c.mesh.flood_ttl = parse_number<int>("flood_ttl", v); }},
        {"seen_ttl", [](SimConfig& c, const std::string& v) { c.mesh.seen_ttl = parse_number<int>("seen_ttl", v); }},
        {"bandwidth_cap", [](SimConfig& c, const std::string& v) { c.mesh.bandwidth_cap = parse_number<std::size_t>("bandwidth_cap", v); }},
        {"hash_step", [](SimConfig& c, const std::string& v) { c.hash_step = parse_number<mesh::TupleHash>("hash_step", v); }},
        {"speed", [](SimConfig& c, const std::string& v) { c.motion.speed = parse_number<double>("speed", v); }},
        {"dt", [](SimConfig& c, const std::string& v) { c.motion.dt = parse_number<double>("dt", v); }},
        {"robot_radius", [](SimConfig& c, const std::string& v) { c.motion.robot_radius = parse_number<double>("robot_radius", v); }},
        {"proximity_range", [](SimConfig& c, const std::string& v) { c.motion.proximity_range = parse_number<double>("proximity_range", v); }},
        {"turn_jitter", [](SimConfig& c, const std::string& v) { c.motion.turn_jitter = parse_number<double>("turn_jitter", v); }},
        {"heading_noise", [](SimConfig& c, const std::string& v) { c.motion.heading_noise = parse_number<double>("heading_noise", v); }},
        {"motion_enabled", [](SimConfig& c, const std::string& v) { c.motion_enabled = parse_bool("motion_enabled", v); }},
        {"frustum_near", [](SimConfig& c, const std::string& v) { c.frustum.near = parse_number<double>("frustum_near", v); }},
        {"frustum_far", [](SimConfig& c, const std::string& v) { c.frustum.far = parse_number<double>("frustum_far", v); }},
        {"frustum_hfov_deg", [](SimConfig& c, const std::string& v) { c.frustum.horizontal_fov = kDegree * parse_number<double>("frustum_hfov_deg", v); }},
        {"frustum_vfov_deg", [](SimConfig& c, const std::string& v) { c.frustum.vertical_fov = kDegree * parse_number<double>("frustum_vfov_deg", v); }},
        {"frustum_mount_height", [](SimConfig& c, const std::string& v) { c.frustum.mount_height = parse_number<double>("frustum_mount_height", v); }},
        {"audit_every", [](SimConfig& c, const std::string& v) { c.audit_every = parse_number<int>("audit_every", v); }},
        {"class_accuracy", [](SimConfig& c, const std::string& v) { c.classes = parse_classes(v); }},
    };
    return table;
}

}  // namespace

int SimConfig::ticks_per_second() const { return std::max(1, static_cast<int>(std::lround(1.0 / motion.dt))); }

void SimConfig::validate() const {
    try {
        if (agents < 1 || agents >= mesh::kBroadcast) throw ConfigError("agents must be in [1, 65534]");
        if (!(comm_range > 0)) throw ConfigError("comm_range must be positive");
        if (!(scene.arena_size > 0)) throw ConfigError("arena_size must be positive");
        if (recording_timeout < 1 || querying_timeout < 1 || reply_wait < 1)
            throw ConfigError("timeouts must be positive");
        if (revisit_after < 1) throw ConfigError("revisit_after must be positive");
        if (min_votes < 1) throw ConfigError("min_votes must be at least 1");
        if (hash_step < 1) throw ConfigError("hash_step must be at least 1");
        if (audit_every < 0) throw ConfigError("audit_every must be nonnegative");
        if (classes.class_count() > 255) throw ConfigError("at most 255 classes fit the wire format");
        if (classes.names.size() != classes.accuracy.size()) throw ConfigError("class_accuracy needs a name per class");
        mesh.validate();
        motion.validate();
        frustum.validate();
        classes.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

SimConfig parse_config(std::istream& in, SimConfig base) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second(base, value);
    }
    base.validate();
    return base;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

std::string to_text(const SimConfig& c) {
    std::ostringstream out;
    out << "agents = " << c.agents << '\n'
        << "comm_range = " << num(c.comm_range) << '\n'
        << "arena_size = " << num(c.scene.arena_size) << '\n'
        << "scene_seed = " << c.scene_seed << '\n';
    if (!c.scene_file.empty()) out << "scene_file = " << c.scene_file << '\n';
    out << "object_count = " << c.scene.object_count << '\n'
        << "recording_timeout = " << c.recording_timeout << '\n'
        << "querying_timeout = " << c.querying_timeout << '\n'
        << "reply_wait = " << c.reply_wait << '\n'
        << "min_votes = " << c.min_votes << '\n'
        << "revisit_after = " << c.revisit_after << '\n'
        << "memory_capacity = " << c.mesh.memory_capacity << '\n'
        << "storage_capacity = " << c.mesh.storage_capacity << '\n'
        << "reply_capacity = " << c.mesh.reply_capacity << '\n'
        << "store_ttl = " << c.mesh.store_ttl << '\n'
        << "reply_ttl = " << c.mesh.reply_ttl << '\n'
        << "flood_ttl = " << c.mesh.flood_ttl << '\n'
        << "seen_ttl = " << c.mesh.seen_ttl << '\n'
        << "bandwidth_cap = " << c.mesh.bandwidth_cap << '\n'
        << "hash_step = " << c.hash_step << '\n'
        << "speed = " << num(c.motion.speed) << '\n'
        << "dt = " << num(c.motion.dt) << '\n'
        << "robot_radius = " << num(c.motion.robot_radius) << '\n'
        << "proximity_range = " << num(c.motion.proximity_range) << '\n'
        << "turn_jitter = " << num(c.motion.turn_jitter) << '\n'
        << "heading_noise = " << num(c.motion.heading_noise) << '\n'
        << "motion_enabled = " << (c.motion_enabled ? "true" : "false") << '\n'
        << "frustum_near = " << num(c.frustum.near) << '\n'
        << "frustum_far = " << num(c.frustum.far) << '\n'
        << "frustum_hfov_deg = " << num(c.frustum.horizontal_fov / kDegree) << '\n'
        << "frustum_vfov_deg = " << num(c.frustum.vertical_fov / kDegree) << '\n'
        << "frustum_mount_height = " << num(c.frustum.mount_height) << '\n'
        << "audit_every = " << c.audit_every << '\n'
        << "class_accuracy = ";
    for (int i = 0; i < c.classes.class_count(); ++i) {
        if (i) out << ',';
        out << c.classes.names[static_cast<std::size_t>(i)] << ':' << num(c.classes.accuracy[static_cast<std::size_t>(i)]);
    }
    out << '\n';
    return out.str();
}

}  // namespace annomesh
