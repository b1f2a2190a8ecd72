#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "haptic/body_model.hpp"
#include "haptic/collision.hpp"
#include "haptic/device.hpp"
#include "haptic/geometry.hpp"

namespace haptic {

struct Keyframe {
    std::int64_t t_ms;
    std::array<Vec3, kJointCount> joints;
};

struct UserTrack {
    std::uint8_t user_id;
    std::vector<Keyframe> keyframes;
};

struct Scenario {
    double tick_hz = 30.0;
    std::int64_t duration_ms = 0;
    std::vector<SceneObject> objects;
    std::vector<UserTrack> users;
    RadiiConfig radii = RadiiConfig::defaults();
    std::optional<std::int64_t> repeat_every;

    void validate() const {
        if (!(tick_hz > 0)) throw std::invalid_argument("tick_hz must be > 0");
        if (users.empty()) throw std::invalid_argument("scenario needs at least one user");
        for (const auto& u : users) {
            if (u.keyframes.empty())
                throw std::invalid_argument("user " + std::to_string(u.user_id) + " has no keyframes");
            for (std::size_t i = 1; i < u.keyframes.size(); ++i) {
                if (u.keyframes[i].t_ms <= u.keyframes[i - 1].t_ms)
                    throw std::invalid_argument(
                        "user " + std::to_string(u.user_id) + ": keyframes not time-sorted at t_ms " +
                        std::to_string(u.keyframes[i - 1].t_ms) + " -> " +
                        std::to_string(u.keyframes[i].t_ms));
            }
        }
        for (const auto& o : objects) o.validate();
    }
};

// Per-coordinate linear interpolation between keyframes, clamped to the
// nearest keyframe outside the covered range.
inline SkeletonFrame sample_track(const UserTrack& track, std::int64_t t_ms) {
    SkeletonFrame frame;
    frame.user_id = track.user_id;
    frame.timestamp_ms = t_ms;

    const auto& kfs = track.keyframes;
    if (t_ms <= kfs.front().t_ms) {
        frame.joints = kfs.front().joints;
        return frame;
    }
    if (t_ms >= kfs.back().t_ms) {
        frame.joints = kfs.back().joints;
        return frame;
    }
    auto upper = std::upper_bound(kfs.begin(), kfs.end(), t_ms,
                                  [](std::int64_t t, const Keyframe& k) { return t < k.t_ms; });
    const Keyframe& b = *upper;
    const Keyframe& a = *(upper - 1);
    double t = static_cast<double>(t_ms - a.t_ms) / static_cast<double>(b.t_ms - a.t_ms);
    for (std::size_t j = 0; j < kJointCount; ++j) frame.joints[j] = lerp(a.joints[j], b.joints[j], t);
    return frame;
}

inline WorldState sample_world(const Scenario& scenario, std::int64_t t_ms) {
    WorldState world;
    world.tick_ms = t_ms;
    world.objects = scenario.objects;
    for (const auto& u : scenario.users) world.skeletons.push_back(sample_track(u, t_ms));
    return world;
}

namespace detail {

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline RadiiConfig parse_radii(const nlohmann::json& j) {
    RadiiConfig radii = RadiiConfig::defaults();
    for (auto& [name, value] : j.items()) {
        auto part = body_part_from_name(name);
        if (!part) throw std::invalid_argument("radii: unknown body part \"" + name + "\"");
        radii.set(*part, value.get<double>());
    }
    return radii;
}

inline MotorMap parse_motor_map(const nlohmann::json& j) {
    MotorMap map;
    for (auto& [name, value] : j.items()) {
        auto part = body_part_from_name(name);
        if (!part) throw std::invalid_argument("motor_map: unknown body part \"" + name + "\"");
        map.set(*part, value.get<int>());
    }
    if (auto err = map.validate()) throw std::invalid_argument("motor_map: " + *err);
    return map;
}

inline SceneObject parse_object(const nlohmann::json& j) {
    SceneObject obj;
    obj.object_id = j.at("id").get<std::string>();
    const auto& shape = j.at("shape");
    const std::string type = shape.at("type").get<std::string>();
    if (type == "sphere") {
        obj.shape = SphereShape{detail::parse_vec3(shape.at("center"), obj.object_id + ".center"),
                                shape.at("radius").get<double>()};
    } else if (type == "aabb") {
        obj.shape = AabbShape{detail::parse_vec3(shape.at("min"), obj.object_id + ".min"),
                              detail::parse_vec3(shape.at("max"), obj.object_id + ".max")};
    } else {
        throw std::invalid_argument("object " + obj.object_id + ": unknown shape type \"" + type + "\"");
    }
    obj.validate();
    return obj;
}

inline Scenario parse_scenario(const nlohmann::json& j) {
    Scenario s;
    s.tick_hz = j.value("tick_hz", 30.0);
    s.duration_ms = j.at("duration_ms").get<std::int64_t>();
    if (j.contains("repeat_every") && !j["repeat_every"].is_null())
        s.repeat_every = j["repeat_every"].get<std::int64_t>();
    if (j.contains("radii")) s.radii = parse_radii(j["radii"]);
    for (const auto& obj : j.value("objects", nlohmann::json::array())) s.objects.push_back(parse_object(obj));
    for (const auto& uj : j.at("users")) {
        UserTrack track;
        track.user_id = uj.at("user_id").get<std::uint8_t>();
        for (const auto& kj : uj.at("keyframes")) {
            Keyframe kf;
            kf.t_ms = kj.at("t_ms").get<std::int64_t>();
            const auto& joints = kj.at("joints");
            if (!joints.is_array() || joints.size() != kJointCount)
                throw std::invalid_argument("user " + std::to_string(track.user_id) + " t_ms " +
                                            std::to_string(kf.t_ms) + ": expected 20 joints, got " +
                                            std::to_string(joints.size()));
            for (std::size_t i = 0; i < kJointCount; ++i)
                kf.joints[i] = detail::parse_vec3(joints[i], "joint " + std::to_string(i));
            track.keyframes.push_back(std::move(kf));
        }
        s.users.push_back(std::move(track));
    }
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("scenario " + path + ": " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario " + path + ": " + e.what());
    }
}

inline DeviceConfig load_device_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open device config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("device config " + path + ": " + e.what());
    }
    DeviceConfig c;
    try {
        c.user_id = j.at("user_id").get<std::uint8_t>();
        c.listen_port = j.value("port", 0);
        c.pulse_ms = j.value("pulse_ms", 200);
        const std::string policy = j.value("overlap_policy", "EXTEND");
        if (policy == "EXTEND") {
            c.overlap_policy = OverlapPolicy::Extend;
        } else if (policy == "RESTART") {
            c.overlap_policy = OverlapPolicy::Restart;
        } else {
            throw std::invalid_argument("overlap_policy must be RESTART or EXTEND");
        }
        if (j.contains("motor_map")) c.motor_map = parse_motor_map(j["motor_map"]);
        c.dedup_seq = j.value("dedup_seq", false);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("device config " + path + ": " + e.what());
    }
    c.validate();
    return c;
}

// One user reaching toward a 0.3 m cube at the origin: the right-hand joints
// sweep from 1 m away to the cube center over 2 s while the rest of the body
// stays clear.
inline Scenario red_cube_scenario() {
    Scenario s;
    s.tick_hz = 30.0;
    s.duration_ms = 2500;
    s.objects.push_back({"red-cube", AabbShape{{-0.15, -0.15, -0.15}, {0.15, 0.15, 0.15}}});

    auto body_at = [](const Vec3& hand) {
        std::array<Vec3, kJointCount> joints;
        // Body parked 2.5 m behind the cube along -x, well outside every radius.
        const Vec3 base{-2.5, 0.0, 0.0};
        for (std::size_t i = 0; i < kJointCount; ++i)
            joints[i] = base + Vec3{0.0, static_cast<double>(i) * 0.05, 0.0};
        joints[10] = hand;  // WristRight
        joints[11] = hand;  // HandRight
        return joints;
    };

    UserTrack track;
    track.user_id = 1;
    track.keyframes.push_back({0, body_at({-1.0, 0.0, 0.0})});
    track.keyframes.push_back({2000, body_at({0.0, 0.0, 0.0})});
    s.users.push_back(std::move(track));
    s.validate();
    return s;
}

// Two avatars whose right/left hands meet for one second mid-run.
inline Scenario two_avatar_touch_scenario() {
    Scenario s;
    s.tick_hz = 30.0;
    s.duration_ms = 3000;

    auto body_at = [](const Vec3& base, std::size_t hand_a, std::size_t hand_b, const Vec3& hand) {
        std::array<Vec3, kJointCount> joints;
        for (std::size_t i = 0; i < kJointCount; ++i)
            joints[i] = base + Vec3{0.0, static_cast<double>(i) * 0.05, 0.0};
        joints[hand_a] = hand;
        joints[hand_b] = hand;
        return joints;
    };

    // User 1's right hand (joints 10, 11) approaches from -x, user 2's left
    // hand (joints 6, 7) from +x; they meet at the origin from t=1000 to 2000.
    UserTrack a;
    a.user_id = 1;
    a.keyframes.push_back({0, body_at({-3.0, 0, 0}, 10, 11, {-1.0, 0, 0})});
    a.keyframes.push_back({1000, body_at({-3.0, 0, 0}, 10, 11, {-0.05, 0, 0})});
    a.keyframes.push_back({2000, body_at({-3.0, 0, 0}, 10, 11, {-0.05, 0, 0})});
    a.keyframes.push_back({2100, body_at({-3.0, 0, 0}, 10, 11, {-1.0, 0, 0})});

    UserTrack b;
    b.user_id = 2;
    b.keyframes.push_back({0, body_at({3.0, 0, 0}, 6, 7, {1.0, 0, 0})});
    b.keyframes.push_back({1000, body_at({3.0, 0, 0}, 6, 7, {0.05, 0, 0})});
    b.keyframes.push_back({2000, body_at({3.0, 0, 0}, 6, 7, {0.05, 0, 0})});
    b.keyframes.push_back({2100, body_at({3.0, 0, 0}, 6, 7, {1.0, 0, 0})});

    s.users.push_back(std::move(a));
    s.users.push_back(std::move(b));
    s.validate();
    return s;
}

}  // namespace haptic
