#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <fstream>

#include "haptic/scenario.hpp"

using namespace haptic;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& content) {
        path = "scenario_test_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter++) + ".json";
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
    static inline int counter = 0;
};

std::string joints_json(double x, double y, double z) {
    std::string one = "[" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) + "]";
    std::string out = "[";
    for (int i = 0; i < 20; ++i) out += (i ? "," : "") + one;
    return out + "]";
}

}  // namespace

TEST_CASE("load_scenario: minimal valid file") {
    TempFile f(R"({
        "tick_hz": 30,
        "duration_ms": 1000,
        "objects": [{"id": "ball", "shape": {"type": "sphere", "center": [0,1,0], "radius": 0.2}}],
        "users": [{"user_id": 1, "keyframes": [
            {"t_ms": 0, "joints": )" + joints_json(0, 0, 0) + R"(},
            {"t_ms": 1000, "joints": )" + joints_json(1, 0, 0) + R"(}
        ]}]
    })");
    auto s = load_scenario(f.path);
    CHECK(s.tick_hz == 30);
    CHECK(s.duration_ms == 1000);
    REQUIRE(s.objects.size() == 1);
    REQUIRE(s.users.size() == 1);
    CHECK(s.users[0].keyframes.size() == 2);
}

TEST_CASE("load_scenario: unsorted keyframes name the user and timestamps") {
    TempFile f(R"({
        "duration_ms": 1000,
        "users": [{"user_id": 3, "keyframes": [
            {"t_ms": 500, "joints": )" + joints_json(0, 0, 0) + R"(},
            {"t_ms": 100, "joints": )" + joints_json(1, 0, 0) + R"(}
        ]}]
    })");
    try {
        load_scenario(f.path);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("user 3") != std::string::npos);
        CHECK(msg.find("500") != std::string::npos);
        CHECK(msg.find("100") != std::string::npos);
    }
}

TEST_CASE("load_scenario: parse errors and bad joint counts are reported") {
    TempFile broken("{ not json");
    CHECK_THROWS_AS(load_scenario(broken.path), std::invalid_argument);

    TempFile short_joints(R"({
        "duration_ms": 100,
        "users": [{"user_id": 1, "keyframes": [{"t_ms": 0, "joints": [[0,0,0]]}]}]
    })");
    try {
        load_scenario(short_joints.path);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("20 joints") != std::string::npos);
    }
    CHECK_THROWS_AS(load_scenario("does_not_exist.json"), std::invalid_argument);
}

TEST_CASE("sample_track: linear interpolation and clamping") {
    UserTrack track;
    track.user_id = 1;
    Keyframe k0{0, {}}, k1{1000, {}};
    for (auto& j : k1.joints) j = {1, 0, 0};
    track.keyframes = {k0, k1};

    auto mid = sample_track(track, 500);
    CHECK(mid.joints[0].x == Catch::Approx(0.5));
    auto past = sample_track(track, 2000);
    CHECK(past.joints[0].x == Catch::Approx(1.0));
    auto before = sample_track(track, -50);
    CHECK(before.joints[0].x == Catch::Approx(0.0));
}

TEST_CASE("red cube scenario: no contact at t=0, exactly one at the end") {
    auto s = red_cube_scenario();
    auto start = detect_contacts(sample_world(s, 0), s.radii);
    CHECK(start.empty());

    auto end = detect_contacts(sample_world(s, 2000), s.radii);
    REQUIRE(end.size() == 1);
    CHECK(end[0].target_user == 1);
    CHECK(end[0].target_part == BodyPart::RightHand);
    CHECK(end[0].source.is_object());
}

TEST_CASE("two avatar scenario: mutual hand contact mid-run only") {
    auto s = two_avatar_touch_scenario();
    CHECK(detect_contacts(sample_world(s, 0), s.radii).empty());
    auto mid = detect_contacts(sample_world(s, 1500), s.radii);
    REQUIRE(mid.size() == 2);
    CHECK(mid[0] == Contact{ContactSource::user(2), 1, BodyPart::RightHand});
    CHECK(mid[1] == Contact{ContactSource::user(1), 2, BodyPart::LeftHand});
    CHECK(detect_contacts(sample_world(s, 2900), s.radii).empty());
}

TEST_CASE("device config file parsing") {
    TempFile f(R"({
        "user_id": 4,
        "port": 5000,
        "pulse_ms": 150,
        "overlap_policy": "RESTART",
        "motor_map": {"Head": 9, "Torso": 8, "LeftUpperArm": 7, "LeftHand": 6,
                      "RightUpperArm": 5, "RightHand": 4, "LeftLeg": 3, "LeftFoot": 2,
                      "RightLeg": 1, "RightFoot": 0}
    })");
    auto cfg = load_device_config(f.path);
    CHECK(cfg.user_id == 4);
    CHECK(cfg.effective_port() == 5000);
    CHECK(cfg.pulse_ms == 150);
    CHECK(cfg.overlap_policy == OverlapPolicy::Restart);
    CHECK(cfg.motor_map.channel(BodyPart::RightHand) == 4);
}

TEST_CASE("device config: bad motor map is rejected") {
    TempFile f(R"({"user_id": 4, "motor_map": {"Head": 0, "Torso": 0}})");
    CHECK_THROWS_AS(load_device_config(f.path), std::invalid_argument);
}

TEST_CASE("radii overrides apply") {
    TempFile f(R"({
        "duration_ms": 100,
        "radii": {"Head": 0.5},
        "users": [{"user_id": 1, "keyframes": [{"t_ms": 0, "joints": )" + joints_json(0, 0, 0) + R"(}]}]
    })");
    auto s = load_scenario(f.path);
    CHECK(s.radii.radius(BodyPart::Head) == 0.5);
    CHECK(s.radii.radius(BodyPart::Torso) == 0.25);  // default retained
}
