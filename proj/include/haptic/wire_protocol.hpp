#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "haptic/body_model.hpp"
#include "haptic/result.hpp"

namespace haptic {

// TCP app-layer frame: [0xA5][type][payload len u16 BE][payload][xor checksum of payload].
// All multi-byte integers big-endian. Bit-exact contract shared with the device side.

inline constexpr std::uint8_t kFrameMagic = 0xA5;
inline constexpr std::uint8_t kUartStart = 0x7E;
inline constexpr std::size_t kUartFrameLen = 6;

enum class Status : std::uint8_t {
    Ok = 0,
    NotFound = 1,
    RejectedWrongUser = 2,
    Malformed = 3,
};

struct Ipv4 {
    std::array<std::uint8_t, 4> octets{};
    friend bool operator==(const Ipv4&, const Ipv4&) = default;

    std::string to_string() const {
        return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." +
               std::to_string(octets[2]) + "." + std::to_string(octets[3]);
    }
};

inline constexpr Ipv4 kLoopback{{127, 0, 0, 1}};

struct Register {
    std::uint8_t user_id;
    Ipv4 ipv4;
    std::uint16_t port;
    friend bool operator==(const Register&, const Register&) = default;
};
struct RegisterAck {
    Status status;
    friend bool operator==(const RegisterAck&, const RegisterAck&) = default;
};
struct Lookup {
    std::uint8_t user_id;
    friend bool operator==(const Lookup&, const Lookup&) = default;
};
struct LookupResp {
    Status status;
    Ipv4 ipv4;
    std::uint16_t port;
    friend bool operator==(const LookupResp&, const LookupResp&) = default;
};
struct CollisionEvent {
    std::uint8_t target_user;
    BodyPart body_part;
    std::uint8_t source_user;  // 0xFF = environment object
    std::uint16_t seq;
    friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};
struct EventAck {
    std::uint16_t seq;
    Status status;
    friend bool operator==(const EventAck&, const EventAck&) = default;
};

using Message = std::variant<Register, RegisterAck, Lookup, LookupResp, CollisionEvent, EventAck>;

enum class MsgType : std::uint8_t {
    Register = 0x01,
    RegisterAck = 0x02,
    Lookup = 0x03,
    LookupResp = 0x04,
    CollisionEvent = 0x10,
    EventAck = 0x11,
};

enum class DecodeError {
    Truncated,
    BadMagic,
    UnknownType,
    LengthMismatch,
    ChecksumMismatch,
    BadPayload,
};

inline const char* decode_error_name(DecodeError e) {
    switch (e) {
        case DecodeError::Truncated: return "truncated";
        case DecodeError::BadMagic: return "bad magic";
        case DecodeError::UnknownType: return "unknown type";
        case DecodeError::LengthMismatch: return "length mismatch";
        case DecodeError::ChecksumMismatch: return "checksum mismatch";
        case DecodeError::BadPayload: return "bad payload";
    }
    return "?";
}

inline std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
    std::uint8_t acc = 0;
    for (std::uint8_t b : bytes) acc ^= b;
    return acc;
}

namespace detail {

inline bool valid_user_id(std::uint8_t id) { return id >= kMinUserId && id <= kMaxUserId; }
inline bool valid_source_id(std::uint8_t id) { return valid_user_id(id) || id == kObjectSourceId; }
inline bool valid_status(std::uint8_t s) { return s <= 3; }

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline std::uint16_t get_u16(std::span<const std::uint8_t> b) {
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

}  // namespace detail

inline void validate_message(const Message& msg) {
    auto bad = [](const char* what) { throw std::invalid_argument(std::string("invalid message: ") + what); };
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Register>) {
                if (!detail::valid_user_id(m.user_id)) bad("register user_id");
            } else if constexpr (std::is_same_v<T, RegisterAck>) {
                if (!detail::valid_status(static_cast<std::uint8_t>(m.status))) bad("ack status");
            } else if constexpr (std::is_same_v<T, Lookup>) {
                if (!detail::valid_user_id(m.user_id)) bad("lookup user_id");
            } else if constexpr (std::is_same_v<T, LookupResp>) {
                if (!detail::valid_status(static_cast<std::uint8_t>(m.status))) bad("resp status");
            } else if constexpr (std::is_same_v<T, CollisionEvent>) {
                if (!detail::valid_user_id(m.target_user)) bad("event target_user");
                if (!detail::valid_source_id(m.source_user)) bad("event source_user");
            } else if constexpr (std::is_same_v<T, EventAck>) {
                if (!detail::valid_status(static_cast<std::uint8_t>(m.status))) bad("ack status");
            }
        },
        msg);
}

inline std::vector<std::uint8_t> encode_message(const Message& msg) {
    validate_message(msg);
    std::vector<std::uint8_t> payload;
    MsgType type{};
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Register>) {
                type = MsgType::Register;
                payload.push_back(m.user_id);
                payload.insert(payload.end(), m.ipv4.octets.begin(), m.ipv4.octets.end());
                detail::put_u16(payload, m.port);
            } else if constexpr (std::is_same_v<T, RegisterAck>) {
                type = MsgType::RegisterAck;
                payload.push_back(static_cast<std::uint8_t>(m.status));
            } else if constexpr (std::is_same_v<T, Lookup>) {
                type = MsgType::Lookup;
                payload.push_back(m.user_id);
            } else if constexpr (std::is_same_v<T, LookupResp>) {
                type = MsgType::LookupResp;
                payload.push_back(static_cast<std::uint8_t>(m.status));
                payload.insert(payload.end(), m.ipv4.octets.begin(), m.ipv4.octets.end());
                detail::put_u16(payload, m.port);
            } else if constexpr (std::is_same_v<T, CollisionEvent>) {
                type = MsgType::CollisionEvent;
                payload.push_back(m.target_user);
                payload.push_back(body_part_code(m.body_part));
                payload.push_back(m.source_user);
                detail::put_u16(payload, m.seq);
            } else if constexpr (std::is_same_v<T, EventAck>) {
                type = MsgType::EventAck;
                detail::put_u16(payload, m.seq);
                payload.push_back(static_cast<std::uint8_t>(m.status));
            }
        },
        msg);

    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 5);
    out.push_back(kFrameMagic);
    out.push_back(static_cast<std::uint8_t>(type));
    detail::put_u16(out, static_cast<std::uint16_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    out.push_back(xor_checksum(payload));
    return out;
}

inline Result<Message, DecodeError> decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 5) return DecodeError::Truncated;
    if (bytes[0] != kFrameMagic) return DecodeError::BadMagic;
    const std::uint8_t type = bytes[1];
    const std::uint16_t len = detail::get_u16(bytes.subspan(2, 2));

    std::size_t expected = 0;
    switch (static_cast<MsgType>(type)) {
        case MsgType::Register: expected = 7; break;
        case MsgType::RegisterAck: expected = 1; break;
        case MsgType::Lookup: expected = 1; break;
        case MsgType::LookupResp: expected = 7; break;
        case MsgType::CollisionEvent: expected = 5; break;
        case MsgType::EventAck: expected = 3; break;
        default: return DecodeError::UnknownType;
    }
    if (len != expected || bytes.size() != 5 + expected) return DecodeError::LengthMismatch;

    auto payload = bytes.subspan(4, len);
    if (bytes[4 + len] != xor_checksum(payload)) return DecodeError::ChecksumMismatch;

    auto ipv4_at = [&](std::size_t off) {
        Ipv4 ip;
        for (int i = 0; i < 4; ++i) ip.octets[i] = payload[off + i];
        return ip;
    };

    switch (static_cast<MsgType>(type)) {
        case MsgType::Register: {
            Register m{payload[0], ipv4_at(1), detail::get_u16(payload.subspan(5, 2))};
            if (!detail::valid_user_id(m.user_id)) return DecodeError::BadPayload;
            return Message{m};
        }
        case MsgType::RegisterAck: {
            if (!detail::valid_status(payload[0])) return DecodeError::BadPayload;
            return Message{RegisterAck{static_cast<Status>(payload[0])}};
        }
        case MsgType::Lookup: {
            if (!detail::valid_user_id(payload[0])) return DecodeError::BadPayload;
            return Message{Lookup{payload[0]}};
        }
        case MsgType::LookupResp: {
            if (!detail::valid_status(payload[0])) return DecodeError::BadPayload;
            return Message{LookupResp{static_cast<Status>(payload[0]), ipv4_at(1),
                                      detail::get_u16(payload.subspan(5, 2))}};
        }
        case MsgType::CollisionEvent: {
            auto part = body_part_from_code(payload[1]);
            if (!part || !detail::valid_user_id(payload[0]) || !detail::valid_source_id(payload[2]))
                return DecodeError::BadPayload;
            return Message{CollisionEvent{payload[0], *part, payload[2],
                                          detail::get_u16(payload.subspan(3, 2))}};
        }
        case MsgType::EventAck: {
            if (!detail::valid_status(payload[2])) return DecodeError::BadPayload;
            return Message{EventAck{detail::get_u16(payload.subspan(0, 2)),
                                    static_cast<Status>(payload[2])}};
        }
        default: return DecodeError::UnknownType;  // unreachable
    }
}

// Serial hop between the Wi-Fi layer and the MCU layer:
// [0x7E][user_id][part][seq hi][seq lo][xor of bytes 1..4].

enum class UartError {
    WrongLength,
    BadStartByte,
    BadChecksum,
    BadPartCode,
};

inline const char* uart_error_name(UartError e) {
    switch (e) {
        case UartError::WrongLength: return "wrong length";
        case UartError::BadStartByte: return "bad start byte";
        case UartError::BadChecksum: return "bad checksum";
        case UartError::BadPartCode: return "bad part code";
    }
    return "?";
}

struct UartFrame {
    std::uint8_t user_id;
    BodyPart body_part;
    std::uint16_t seq;
    friend bool operator==(const UartFrame&, const UartFrame&) = default;
};

inline std::array<std::uint8_t, kUartFrameLen> encode_uart(std::uint8_t user_id, BodyPart part,
                                                           std::uint16_t seq) {
    if (!detail::valid_user_id(user_id)) throw std::invalid_argument("uart user_id out of 1..200");
    std::array<std::uint8_t, kUartFrameLen> out{};
    out[0] = kUartStart;
    out[1] = user_id;
    out[2] = body_part_code(part);
    out[3] = static_cast<std::uint8_t>(seq >> 8);
    out[4] = static_cast<std::uint8_t>(seq & 0xFF);
    out[5] = xor_checksum(std::span<const std::uint8_t>(out.data() + 1, 4));
    return out;
}

inline Result<UartFrame, UartError> decode_uart(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kUartFrameLen) return UartError::WrongLength;
    if (bytes[0] != kUartStart) return UartError::BadStartByte;
    if (bytes[5] != xor_checksum(bytes.subspan(1, 4))) return UartError::BadChecksum;
    auto part = body_part_from_code(bytes[2]);
    if (!part) return UartError::BadPartCode;
    return UartFrame{bytes[1], *part, detail::get_u16(bytes.subspan(3, 2))};
}

}  // namespace haptic
