#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "haptic/body_model.hpp"

using namespace haptic;

namespace {

SkeletonFrame frame_at(const Vec3& pos, std::uint8_t user = 1) {
    SkeletonFrame f;
    f.user_id = user;
    for (auto& j : f.joints) j = pos;
    return f;
}

}  // namespace

TEST_CASE("joint_to_body_part follows the fixed table") {
    CHECK(joint_to_body_part(11) == BodyPart::RightHand);
    CHECK(joint_to_body_part(3) == BodyPart::Head);
    CHECK(joint_to_body_part(0) == BodyPart::Torso);
    CHECK(joint_to_body_part(19) == BodyPart::RightFoot);
    CHECK_THROWS_AS(joint_to_body_part(20), std::out_of_range);
}

TEST_CASE("joint_to_body_part is total and covers every part") {
    std::array<int, kBodyPartCount> hits{};
    for (std::size_t j = 0; j < kJointCount; ++j) hits[body_part_code(joint_to_body_part(j))]++;
    for (int h : hits) CHECK(h > 0);
}

TEST_CASE("proxy_spheres: identical joints collapse to one center") {
    auto spheres = proxy_spheres(frame_at({0, 0, 0}), RadiiConfig::defaults());
    REQUIRE(spheres.size() == kBodyPartCount);
    CHECK(spheres[0].part == BodyPart::Head);
    CHECK(spheres[0].center == Vec3{0, 0, 0});
    CHECK(spheres[0].radius == 0.15);
    // Output ordered by wire code.
    for (std::size_t i = 0; i < spheres.size(); ++i)
        CHECK(body_part_code(spheres[i].part) == i);
}

TEST_CASE("proxy_spheres: left hand is the joint 6/7 midpoint") {
    auto f = frame_at({0, 0, 0});
    f.joints[6] = {1, 0, 0};
    f.joints[7] = {1, 0, 0.2};
    auto spheres = proxy_spheres(f, RadiiConfig::defaults());
    const auto& hand = spheres[body_part_code(BodyPart::LeftHand)];
    CHECK(hand.center.x == Catch::Approx(1.0));
    CHECK(hand.center.y == Catch::Approx(0.0));
    CHECK(hand.center.z == Catch::Approx(0.1));
}

TEST_CASE("proxy_spheres matches an independent per-part mean") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        SkeletonFrame f;
        f.user_id = 1;
        for (auto& j : f.joints) j = {coord(rng), coord(rng), coord(rng)};
        auto spheres = proxy_spheres(f, RadiiConfig::defaults());
        for (BodyPart p : all_body_parts()) {
            Vec3 sum{};
            int n = 0;
            for (std::size_t j = 0; j < kJointCount; ++j) {
                if (joint_to_body_part(j) == p) {
                    sum = sum + f.joints[j];
                    ++n;
                }
            }
            const auto& s = spheres[body_part_code(p)];
            CHECK(s.center.x == Catch::Approx(sum.x / n));
            CHECK(s.center.y == Catch::Approx(sum.y / n));
            CHECK(s.center.z == Catch::Approx(sum.z / n));
        }
    }
}

TEST_CASE("proxy_spheres is translation equivariant") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    SkeletonFrame f;
    f.user_id = 1;
    for (auto& j : f.joints) j = {coord(rng), coord(rng), coord(rng)};
    Vec3 v{3.5, -1.25, 0.75};
    SkeletonFrame g = f;
    for (auto& j : g.joints) j = j + v;
    auto a = proxy_spheres(f, RadiiConfig::defaults());
    auto b = proxy_spheres(g, RadiiConfig::defaults());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i].center.x == Catch::Approx(a[i].center.x + v.x));
        CHECK(b[i].center.y == Catch::Approx(a[i].center.y + v.y));
        CHECK(b[i].center.z == Catch::Approx(a[i].center.z + v.z));
    }
}

TEST_CASE("proxy_spheres rejects invalid frames") {
    auto f = frame_at({0, 0, 0});
    f.joints[5].y = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(proxy_spheres(f, RadiiConfig::defaults()), std::invalid_argument);
    auto g = frame_at({0, 0, 0}, 0);
    CHECK_THROWS_AS(proxy_spheres(g, RadiiConfig::defaults()), std::invalid_argument);
}

TEST_CASE("motor map validation") {
    CHECK_FALSE(MotorMap::identity().validate().has_value());

    MotorMap dup = MotorMap::identity();
    dup.set(BodyPart::Torso, 0);  // clashes with Head
    auto err = dup.validate();
    REQUIRE(err.has_value());
    CHECK(err->find("duplicate channel 0") != std::string::npos);

    MotorMap partial;
    for (BodyPart p : all_body_parts())
        if (p != BodyPart::RightFoot) partial.set(p, body_part_code(p));
    err = partial.validate();
    REQUIRE(err.has_value());
    CHECK(err->find("RightFoot") != std::string::npos);
}

TEST_CASE("radii must be positive and finite") {
    RadiiConfig r = RadiiConfig::defaults();
    CHECK_THROWS_AS(r.set(BodyPart::Head, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(r.set(BodyPart::Head, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(r.set(BodyPart::Head, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}

TEST_CASE("body part names roundtrip") {
    for (BodyPart p : all_body_parts()) {
        auto back = body_part_from_name(body_part_name(p));
        REQUIRE(back.has_value());
        CHECK(*back == p);
    }
    CHECK_FALSE(body_part_from_name("Elbow").has_value());
}
