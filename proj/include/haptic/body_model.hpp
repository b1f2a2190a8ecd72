#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "haptic/geometry.hpp"

namespace haptic {

// Body regions carried on the wire. Codes are part of the protocol contract
// and must stay dense in 0..9.
enum class BodyPart : std::uint8_t {
    Head = 0,
    Torso = 1,
    LeftUpperArm = 2,
    LeftHand = 3,
    RightUpperArm = 4,
    RightHand = 5,
    LeftLeg = 6,
    LeftFoot = 7,
    RightLeg = 8,
    RightFoot = 9,
};

inline constexpr std::size_t kBodyPartCount = 10;
inline constexpr std::size_t kJointCount = 20;
inline constexpr std::uint8_t kMinUserId = 1;
inline constexpr std::uint8_t kMaxUserId = 200;
inline constexpr std::uint8_t kObjectSourceId = 0xFF;

inline constexpr std::array<BodyPart, kBodyPartCount> all_body_parts() {
    return {BodyPart::Head,         BodyPart::Torso,     BodyPart::LeftUpperArm,
            BodyPart::LeftHand,     BodyPart::RightUpperArm, BodyPart::RightHand,
            BodyPart::LeftLeg,      BodyPart::LeftFoot,  BodyPart::RightLeg,
            BodyPart::RightFoot};
}

inline std::optional<BodyPart> body_part_from_code(std::uint8_t code) {
    if (code >= kBodyPartCount) return std::nullopt;
    return static_cast<BodyPart>(code);
}

inline std::uint8_t body_part_code(BodyPart p) { return static_cast<std::uint8_t>(p); }

inline const char* body_part_name(BodyPart p) {
    switch (p) {
        case BodyPart::Head: return "Head";
        case BodyPart::Torso: return "Torso";
        case BodyPart::LeftUpperArm: return "LeftUpperArm";
        case BodyPart::LeftHand: return "LeftHand";
        case BodyPart::RightUpperArm: return "RightUpperArm";
        case BodyPart::RightHand: return "RightHand";
        case BodyPart::LeftLeg: return "LeftLeg";
        case BodyPart::LeftFoot: return "LeftFoot";
        case BodyPart::RightLeg: return "RightLeg";
        case BodyPart::RightFoot: return "RightFoot";
    }
    return "?";
}

inline std::optional<BodyPart> body_part_from_name(const std::string& name) {
    for (BodyPart p : all_body_parts())
        if (name == body_part_name(p)) return p;
    return std::nullopt;
}

// 20-joint skeleton layout (first-generation Kinect ordering):
//  0 HipCenter  1 Spine       2 ShoulderCenter  3 Head
//  4 ShoulderL  5 ElbowL      6 WristL          7 HandL
//  8 ShoulderR  9 ElbowR     10 WristR         11 HandR
// 12 HipL      13 KneeL      14 AnkleL         15 FootL
// 16 HipR      17 KneeR      18 AnkleR         19 FootR
inline BodyPart joint_to_body_part(std::size_t joint_index) {
    static constexpr std::array<BodyPart, kJointCount> table = {
        BodyPart::Torso,         BodyPart::Torso,         BodyPart::Torso,
        BodyPart::Head,          BodyPart::LeftUpperArm,  BodyPart::LeftUpperArm,
        BodyPart::LeftHand,      BodyPart::LeftHand,      BodyPart::RightUpperArm,
        BodyPart::RightUpperArm, BodyPart::RightHand,     BodyPart::RightHand,
        BodyPart::LeftLeg,       BodyPart::LeftLeg,       BodyPart::LeftFoot,
        BodyPart::LeftFoot,      BodyPart::RightLeg,      BodyPart::RightLeg,
        BodyPart::RightFoot,     BodyPart::RightFoot,
    };
    if (joint_index >= kJointCount)
        throw std::out_of_range("joint index " + std::to_string(joint_index) + " not in 0..19");
    return table[joint_index];
}

struct SkeletonFrame {
    std::uint8_t user_id = 0;
    std::int64_t timestamp_ms = 0;
    std::array<Vec3, kJointCount> joints{};

    void validate() const {
        if (user_id < kMinUserId || user_id > kMaxUserId)
            throw std::invalid_argument("skeleton user_id out of 1..200");
        for (const Vec3& j : joints)
            if (!j.finite()) throw std::invalid_argument("skeleton joint coordinate not finite");
    }
};

// Per-part collision proxy radius, meters.
class RadiiConfig {
public:
    RadiiConfig() : radii_{} {}

    static RadiiConfig defaults() {
        RadiiConfig c;
        c.set(BodyPart::Head, 0.15);
        c.set(BodyPart::Torso, 0.25);
        c.set(BodyPart::LeftUpperArm, 0.08);
        c.set(BodyPart::RightUpperArm, 0.08);
        c.set(BodyPart::LeftHand, 0.10);
        c.set(BodyPart::RightHand, 0.10);
        c.set(BodyPart::LeftLeg, 0.10);
        c.set(BodyPart::RightLeg, 0.10);
        c.set(BodyPart::LeftFoot, 0.10);
        c.set(BodyPart::RightFoot, 0.10);
        return c;
    }

    void set(BodyPart p, double radius) {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw std::invalid_argument(std::string("radius for ") + body_part_name(p) +
                                        " must be finite and positive");
        radii_[body_part_code(p)] = radius;
    }

    double radius(BodyPart p) const { return radii_[body_part_code(p)]; }

private:
    std::array<double, kBodyPartCount> radii_;
};

struct ProxySphere {
    BodyPart part;
    Vec3 center;
    double radius;
};

// One sphere per body part, center = mean of member joints, ordered by wire code.
inline std::vector<ProxySphere> proxy_spheres(const SkeletonFrame& frame, const RadiiConfig& radii) {
    frame.validate();
    std::array<Vec3, kBodyPartCount> sum{};
    std::array<int, kBodyPartCount> count{};
    for (std::size_t j = 0; j < kJointCount; ++j) {
        auto code = body_part_code(joint_to_body_part(j));
        sum[code] = sum[code] + frame.joints[j];
        ++count[code];
    }
    std::vector<ProxySphere> out;
    out.reserve(kBodyPartCount);
    for (BodyPart p : all_body_parts()) {
        auto code = body_part_code(p);
        out.push_back({p, sum[code] / static_cast<double>(count[code]), radii.radius(p)});
    }
    return out;
}

// BodyPart -> motor channel. Partial maps are representable so validation can
// name the missing part.
class MotorMap {
public:
    MotorMap() { channels_.fill(-1); }

    static MotorMap identity() {
        MotorMap m;
        for (BodyPart p : all_body_parts()) m.set(p, body_part_code(p));
        return m;
    }

    void set(BodyPart p, int channel) { channels_[body_part_code(p)] = channel; }

    std::optional<int> channel(BodyPart p) const {
        int c = channels_[body_part_code(p)];
        if (c < 0) return std::nullopt;
        return c;
    }

    // ok iff total over all 10 parts and injective; error names the offender.
    std::optional<std::string> validate() const {
        std::array<int, kBodyPartCount> owner;
        owner.fill(-1);
        for (BodyPart p : all_body_parts()) {
            int c = channels_[body_part_code(p)];
            if (c < 0) return std::string("missing body part ") + body_part_name(p);
            if (c > 9) return std::string("channel out of 0..9 for ") + body_part_name(p);
            if (owner[c] >= 0) return "duplicate channel " + std::to_string(c);
            owner[c] = body_part_code(p);
        }
        return std::nullopt;
    }

private:
    std::array<int, kBodyPartCount> channels_;
};

}  // namespace haptic
