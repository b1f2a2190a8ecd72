#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "haptic/body_model.hpp"
#include "haptic/geometry.hpp"

namespace haptic {

struct SphereShape {
    Vec3 center;
    double radius;
};

struct AabbShape {
    Vec3 min;
    Vec3 max;
};

struct SceneObject {
    std::string object_id;
    std::variant<SphereShape, AabbShape> shape;

    void validate() const {
        if (const auto* s = std::get_if<SphereShape>(&shape)) {
            if (!(s->radius > 0.0)) throw std::invalid_argument("object radius must be > 0");
        } else {
            const auto& b = std::get<AabbShape>(shape);
            if (b.min.x > b.max.x || b.min.y > b.max.y || b.min.z > b.max.z)
                throw std::invalid_argument("aabb min must be <= max componentwise");
        }
    }
};

struct WorldState {
    std::vector<SkeletonFrame> skeletons;
    std::vector<SceneObject> objects;
    std::int64_t tick_ms = 0;
};

// Contact source: another user or a scene object.
struct ContactSource {
    std::uint8_t user_id = 0;     // 0 when object
    std::string object_id;        // empty when user

    bool is_object() const { return user_id == 0; }

    static ContactSource user(std::uint8_t id) { return {id, {}}; }
    static ContactSource object(std::string id) { return {0, std::move(id)}; }

    // Users order before objects; users by id, objects by id string.
    friend bool operator<(const ContactSource& a, const ContactSource& b) {
        if (a.is_object() != b.is_object()) return !a.is_object();
        if (a.is_object()) return a.object_id < b.object_id;
        return a.user_id < b.user_id;
    }
    friend bool operator==(const ContactSource&, const ContactSource&) = default;

    std::string to_string() const {
        return is_object() ? object_id : "user" + std::to_string(user_id);
    }
};

struct Contact {
    ContactSource source;
    std::uint8_t target_user;
    BodyPart target_part;

    friend bool operator==(const Contact&, const Contact&) = default;
    friend bool operator<(const Contact& a, const Contact& b) {
        if (a.target_user != b.target_user) return a.target_user < b.target_user;
        if (a.target_part != b.target_part) return body_part_code(a.target_part) < body_part_code(b.target_part);
        return a.source < b.source;
    }
};

// Boundary contact (distance exactly equal) counts as hit.
inline bool sphere_sphere(const Vec3& c1, double r1, const Vec3& c2, double r2) {
    return distance(c1, c2) <= r1 + r2;
}

inline bool sphere_aabb(const Vec3& c, double r, const AabbShape& box) {
    Vec3 closest{std::clamp(c.x, box.min.x, box.max.x), std::clamp(c.y, box.min.y, box.max.y),
                 std::clamp(c.z, box.min.z, box.max.z)};
    return distance(c, closest) <= r;
}

inline bool sphere_object(const Vec3& c, double r, const SceneObject& obj) {
    if (const auto* s = std::get_if<SphereShape>(&obj.shape))
        return sphere_sphere(c, r, s->center, s->radius);
    return sphere_aabb(c, r, std::get<AabbShape>(obj.shape));
}

// All avatar-avatar and avatar-object contacts for one tick, sorted by
// (target_user, part code, source) and deduplicated. Self-contacts excluded.
// Body-body intersections emit both directions.
inline std::vector<Contact> detect_contacts(const WorldState& world, const RadiiConfig& radii) {
    std::vector<std::vector<ProxySphere>> proxies;
    proxies.reserve(world.skeletons.size());
    for (const auto& s : world.skeletons) proxies.push_back(proxy_spheres(s, radii));
    for (const auto& o : world.objects) o.validate();

    std::vector<Contact> out;
    for (std::size_t i = 0; i < world.skeletons.size(); ++i) {
        for (std::size_t j = i + 1; j < world.skeletons.size(); ++j) {
            for (const auto& pa : proxies[i]) {
                for (const auto& pb : proxies[j]) {
                    if (!sphere_sphere(pa.center, pa.radius, pb.center, pb.radius)) continue;
                    out.push_back({ContactSource::user(world.skeletons[i].user_id),
                                   world.skeletons[j].user_id, pb.part});
                    out.push_back({ContactSource::user(world.skeletons[j].user_id),
                                   world.skeletons[i].user_id, pa.part});
                }
            }
        }
        for (const auto& obj : world.objects) {
            for (const auto& p : proxies[i]) {
                if (sphere_object(p.center, p.radius, obj))
                    out.push_back({ContactSource::object(obj.object_id),
                                   world.skeletons[i].user_id, p.part});
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Contact persistence tracker. Emits on rising edge, optionally re-emitting
// every repeat_every ticks while a contact is held.
class DebounceState {
public:
    struct Key {
        ContactSource source;
        std::uint8_t target_user;
        BodyPart target_part;
        friend bool operator<(const Key& a, const Key& b) {
            if (a.target_user != b.target_user) return a.target_user < b.target_user;
            if (a.target_part != b.target_part)
                return body_part_code(a.target_part) < body_part_code(b.target_part);
            return a.source < b.source;
        }
    };

    std::vector<Contact> step(const std::vector<Contact>& contacts, std::int64_t now,
                              std::optional<std::int64_t> repeat_every = std::nullopt) {
        if (last_tick_ && now <= *last_tick_)
            throw std::invalid_argument("debounce ticks must be strictly increasing");
        last_tick_ = now;

        std::map<Key, std::int64_t> next;
        std::vector<Contact> events;
        for (const Contact& c : contacts) {
            Key k{c.source, c.target_user, c.target_part};
            auto it = active_.find(k);
            if (it == active_.end()) {
                next.emplace(k, now);
                events.push_back(c);
            } else {
                next.emplace(k, it->second);
                if (repeat_every && *repeat_every > 0) {
                    std::int64_t held = now - it->second;
                    if (held > 0 && held % *repeat_every == 0) events.push_back(c);
                }
            }
        }
        active_ = std::move(next);
        return events;
    }

    std::size_t active_count() const { return active_.size(); }

private:
    std::map<Key, std::int64_t> active_;
    std::optional<std::int64_t> last_tick_;
};

}  // namespace haptic
