#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "haptic/wire_protocol.hpp"

namespace haptic {

struct RegistryEntry {
    std::uint8_t user_id;
    Ipv4 ipv4;
    std::uint16_t port;
    std::int64_t registered_at_ms;
};

// user_id -> device address, latest registration wins. Pure value type;
// the server serializes access around it.
class Registry {
public:
    using Map = std::map<std::uint8_t, RegistryEntry>;

    RegisterAck handle_register(const Register& msg, std::int64_t now_ms) {
        if (msg.user_id < kMinUserId || msg.user_id > kMaxUserId)
            return RegisterAck{Status::Malformed};
        entries_[msg.user_id] = RegistryEntry{msg.user_id, msg.ipv4, msg.port, now_ms};
        return RegisterAck{Status::Ok};
    }

    LookupResp handle_lookup(const Lookup& msg) const {
        auto it = entries_.find(msg.user_id);
        if (it == entries_.end()) return LookupResp{Status::NotFound, Ipv4{}, 0};
        return LookupResp{Status::Ok, it->second.ipv4, it->second.port};
    }

    const Map& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    Map entries_;
};

}  // namespace haptic
