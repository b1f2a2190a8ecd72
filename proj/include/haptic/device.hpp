#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "haptic/body_model.hpp"
#include "haptic/net.hpp"
#include "haptic/wire_protocol.hpp"

namespace haptic {

enum class OverlapPolicy { Restart, Extend };

struct DeviceConfig {
    std::uint8_t user_id = 0;
    std::uint16_t listen_port = 0;  // 0 = 4210 + user_id
    MotorMap motor_map = MotorMap::identity();
    std::int64_t pulse_ms = 200;
    OverlapPolicy overlap_policy = OverlapPolicy::Extend;
    std::string server_host = "127.0.0.1";
    std::uint16_t server_port = 4210;
    bool dedup_seq = false;  // suppress repeated seq numbers (for retrying senders)
    bool ephemeral_port = false;  // let the OS pick (in-process spawns)

    std::uint16_t effective_port() const {
        if (ephemeral_port) return 0;
        return listen_port != 0 ? listen_port : static_cast<std::uint16_t>(4210 + user_id);
    }

    void validate() const {
        if (user_id < kMinUserId || user_id > kMaxUserId)
            throw std::invalid_argument("device user_id out of 1..200");
        if (pulse_ms <= 0) throw std::invalid_argument("pulse_ms must be > 0");
        if (auto err = motor_map.validate()) throw std::invalid_argument("motor_map: " + *err);
    }
};

struct MotorCommand {
    int motor_channel;
    std::int64_t duration_ms;
    std::uint16_t seq;
};

struct ActuationRecord {
    int motor_channel;
    double start_ms;
    double end_ms;
    std::uint16_t seq;
};

enum class DispatchError { BadFrame, UserMismatch, UnmappedPart };

// Wi-Fi layer decision for one decoded event: ack plus the UART frame to
// forward when the event is for this device.
inline std::pair<EventAck, std::optional<std::array<std::uint8_t, kUartFrameLen>>>
wifi_handle_event(const CollisionEvent& ev, const DeviceConfig& config) {
    if (ev.target_user != config.user_id)
        return {EventAck{ev.seq, Status::RejectedWrongUser}, std::nullopt};
    return {EventAck{ev.seq, Status::Ok}, encode_uart(ev.target_user, ev.body_part, ev.seq)};
}

// Shared millisecond clock so runner and devices produce joinable timestamps.
class RunClock {
public:
    RunClock() : epoch_(std::chrono::steady_clock::now()) {}

    double now_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point epoch_;
};

// MCU-side validation: checksum, own-user re-check, motor map.
inline Result<MotorCommand, DispatchError> mcu_dispatch(std::span<const std::uint8_t> frame_bytes,
                                                        const DeviceConfig& config) {
    auto frame = decode_uart(frame_bytes);
    if (!frame.ok()) return DispatchError::BadFrame;
    if (frame.value().user_id != config.user_id) return DispatchError::UserMismatch;
    auto channel = config.motor_map.channel(frame.value().body_part);
    if (!channel) return DispatchError::UnmappedPart;
    return MotorCommand{*channel, config.pulse_ms, frame.value().seq};
}

// Per-channel motor pulse timeline. Records never overlap within a channel.
class MotorTimeline {
public:
    explicit MotorTimeline(OverlapPolicy policy) : policy_(policy) {}

    void actuate(const MotorCommand& cmd, double now_ms) {
        ActuationRecord* active = nullptr;
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            if (it->motor_channel == cmd.motor_channel) {
                if (it->end_ms > now_ms) active = &*it;
                break;
            }
        }
        if (!active) {
            records_.push_back({cmd.motor_channel, now_ms, now_ms + cmd.duration_ms, cmd.seq});
        } else if (policy_ == OverlapPolicy::Extend) {
            active->end_ms = std::max(active->end_ms, now_ms + cmd.duration_ms);
        } else {
            active->end_ms = now_ms;
            records_.push_back({cmd.motor_channel, now_ms, now_ms + cmd.duration_ms, cmd.seq});
        }
    }

    const std::vector<ActuationRecord>& records() const { return records_; }

private:
    OverlapPolicy policy_;
    std::vector<ActuationRecord> records_;
};

struct DeviceCounters {
    std::uint64_t ok_acks = 0;
    std::uint64_t rejected = 0;
    std::uint64_t malformed = 0;
    std::uint64_t uart_frames = 0;
    std::uint64_t dispatch_ok = 0;
    std::uint64_t dispatch_errors = 0;
    std::uint64_t deduped = 0;
};

// One emulated haptic kit: TCP listener (the Wi-Fi "mini-server"), a
// serialized UART channel paced at 115200 baud, the MCU dispatch stage, and
// a virtual motor timeline.
class DeviceEmulator {
public:
    DeviceEmulator(DeviceConfig config, std::shared_ptr<RunClock> clock = nullptr)
        : config_(validated(std::move(config))),
          clock_(clock ? std::move(clock) : std::make_shared<RunClock>()),
          timeline_(config_.overlap_policy),
          listener_("127.0.0.1", config_.effective_port()) {
        uart_thread_ = std::thread([this] { uart_loop(); });
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~DeviceEmulator() { stop(); }

    std::uint16_t port() const { return listener_.port(); }
    std::uint8_t user_id() const { return config_.user_id; }

    // Registers this device's address with the central server. Retries with
    // backoff 0.5 s, 1 s, 2 s before giving up.
    bool register_with_server(std::string* error = nullptr) {
        static constexpr std::chrono::milliseconds backoff[] = {
            std::chrono::milliseconds(500), std::chrono::milliseconds(1000),
            std::chrono::milliseconds(2000)};
        std::string last_error = "unknown";
        for (int attempt = 0; attempt < 3; ++attempt) {
            try {
                auto conn = TcpConn::connect(config_.server_host, config_.server_port,
                                             std::chrono::milliseconds(2000));
                Register reg{config_.user_id, kLoopback, port()};
                if (write_message(conn, Message{reg})) {
                    auto resp = read_message(conn);
                    if (resp.ok()) {
                        if (const auto* ack = std::get_if<RegisterAck>(&resp.value())) {
                            if (ack->status == Status::Ok) return true;
                            if (error) *error = "registration rejected by server";
                            return false;  // configuration error, retrying won't help
                        }
                    }
                    last_error = "no valid ack";
                } else {
                    last_error = "send failed";
                }
            } catch (const std::runtime_error& e) {
                last_error = e.what();
            }
            std::this_thread::sleep_for(backoff[attempt]);
        }
        if (error) *error = "registration failed after 3 attempts: " + last_error;
        return false;
    }

    void stop() {
        bool was_running = !stopping_.exchange(true);
        if (!was_running) return;
        listener_.close();
        uart_cv_.notify_all();
        if (accept_thread_.joinable()) accept_thread_.join();
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(mu_);
            workers.swap(workers_);
        }
        for (auto& t : workers)
            if (t.joinable()) t.join();
        if (uart_thread_.joinable()) uart_thread_.join();
    }

    // Blocks until every queued UART frame has been dispatched and actuated.
    void drain() {
        std::unique_lock lock(uart_mu_);
        uart_idle_cv_.wait(lock, [this] { return uart_queue_.empty() && !uart_busy_; });
    }

    std::vector<ActuationRecord> timeline() const {
        std::lock_guard lock(timeline_mu_);
        return timeline_.records();
    }

    DeviceCounters counters() const {
        std::lock_guard lock(counters_mu_);
        return counters_;
    }

    std::vector<std::string> event_log() const {
        std::lock_guard lock(log_mu_);
        return log_;
    }

    const RunClock& clock() const { return *clock_; }

private:
    void accept_loop() {
        while (!stopping_) {
            auto conn = listener_.accept(100);
            if (!conn) continue;
            std::lock_guard lock(mu_);
            if (stopping_) break;
            workers_.emplace_back(
                [this](TcpConn c) { serve_connection(std::move(c)); }, std::move(*conn));
        }
    }

    // Per-event connections are the default; a peer holding the connection
    // open may send further events (keep-alive senders).
    void serve_connection(TcpConn conn) {
        conn.set_timeouts(std::chrono::milliseconds(2000));
        while (!stopping_) {
            pollfd pfd{conn.fd(), POLLIN, 0};
            if (::poll(&pfd, 1, 100) <= 0) {
                if (pfd.revents & (POLLHUP | POLLERR)) return;
                continue;
            }
            auto res = read_message(conn);
            if (!res.ok()) {
                if (res.error() == DecodeError::Truncated) return;  // peer closed
                count([](DeviceCounters& c) { c.malformed++; });
                log_line("malformed", 0, "decode: " + std::string(decode_error_name(res.error())));
                write_message(conn, Message{EventAck{0, Status::Malformed}});
                return;
            }
            const auto* ev = std::get_if<CollisionEvent>(&res.value());
            if (!ev) {
                count([](DeviceCounters& c) { c.malformed++; });
                log_line("malformed", 0, "unexpected message type");
                write_message(conn, Message{EventAck{0, Status::Malformed}});
                return;
            }
            if (!handle_event(conn, *ev)) return;
        }
    }

    bool handle_event(TcpConn& conn, const CollisionEvent& ev) {
        auto [ack, frame] = wifi_handle_event(ev, config_);
        if (!frame) {
            count([](DeviceCounters& c) { c.rejected++; });
            log_line("rejected", ev.seq, "target user " + std::to_string(ev.target_user));
            return write_message(conn, Message{ack});
        }
        if (config_.dedup_seq) {
            std::lock_guard lock(seen_mu_);
            if (!seen_seqs_.insert(ev.seq).second) {
                count([](DeviceCounters& c) { c.deduped++; });
                log_line("dedup", ev.seq, "duplicate seq");
                return write_message(conn, Message{EventAck{ev.seq, Status::Ok}});
            }
        }
        // Queue the UART hop before acking so a caller that drains right
        // after the ack still sees the frame in flight.
        {
            std::lock_guard lock(uart_mu_);
            uart_queue_.push_back(*frame);
        }
        uart_cv_.notify_one();
        count([](DeviceCounters& c) { c.ok_acks++; });
        log_line("ack_ok", ev.seq, std::string(body_part_name(ev.body_part)));
        return write_message(conn, Message{ack});
    }

    // Frames cross the emulated serial link strictly one at a time, paced at
    // 115200 baud / 10 bits per byte (~0.52 ms for 6 bytes).
    void uart_loop() {
        constexpr auto byte_time = std::chrono::microseconds(10 * 1000000 / 115200);
        while (true) {
            std::array<std::uint8_t, kUartFrameLen> frame;
            {
                std::unique_lock lock(uart_mu_);
                uart_cv_.wait(lock, [this] { return stopping_ || !uart_queue_.empty(); });
                if (uart_queue_.empty()) return;  // stopping and drained
                frame = uart_queue_.front();
                uart_queue_.pop_front();
                uart_busy_ = true;
            }
            std::this_thread::sleep_for(byte_time * kUartFrameLen);
            count([](DeviceCounters& c) { c.uart_frames++; });
            auto cmd = mcu_dispatch(frame, config_);
            if (cmd.ok()) {
                count([](DeviceCounters& c) { c.dispatch_ok++; });
                double now = clock_->now_ms();
                {
                    std::lock_guard lock(timeline_mu_);
                    timeline_.actuate(cmd.value(), now);
                }
                log_line("actuate", cmd.value().seq,
                         "channel " + std::to_string(cmd.value().motor_channel));
            } else {
                count([](DeviceCounters& c) { c.dispatch_errors++; });
                log_line("dispatch_error", 0, dispatch_error_name(cmd.error()));
            }
            {
                std::lock_guard lock(uart_mu_);
                uart_busy_ = false;
            }
            uart_idle_cv_.notify_all();
        }
    }

    static DeviceConfig validated(DeviceConfig c) {
        c.validate();
        return c;
    }

    static const char* dispatch_error_name(DispatchError e) {
        switch (e) {
            case DispatchError::BadFrame: return "bad uart frame";
            case DispatchError::UserMismatch: return "user mismatch";
            case DispatchError::UnmappedPart: return "unmapped body part";
        }
        return "?";
    }

    template <class F>
    void count(F f) {
        std::lock_guard lock(counters_mu_);
        f(counters_);
    }

    void log_line(const std::string& kind, std::uint16_t seq, const std::string& detail) {
        std::string line = "{\"t_ms\":" + std::to_string(clock_->now_ms()) +
                           ",\"device\":" + std::to_string(config_.user_id) + ",\"kind\":\"" + kind +
                           "\",\"seq\":" + std::to_string(seq) + ",\"detail\":\"" + detail + "\"}";
        std::lock_guard lock(log_mu_);
        log_.push_back(std::move(line));
    }

    DeviceConfig config_;
    std::shared_ptr<RunClock> clock_;

    mutable std::mutex timeline_mu_;
    MotorTimeline timeline_;

    TcpListener listener_;
    std::thread accept_thread_;
    std::thread uart_thread_;
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::atomic<bool> stopping_{false};

    std::mutex uart_mu_;
    std::condition_variable uart_cv_;
    std::condition_variable uart_idle_cv_;
    std::deque<std::array<std::uint8_t, kUartFrameLen>> uart_queue_;
    bool uart_busy_ = false;

    std::mutex seen_mu_;
    std::set<std::uint16_t> seen_seqs_;

    mutable std::mutex counters_mu_;
    DeviceCounters counters_;

    mutable std::mutex log_mu_;
    std::vector<std::string> log_;
};

}  // namespace haptic
