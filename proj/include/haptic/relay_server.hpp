#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "haptic/net.hpp"
#include "haptic/registry.hpp"
#include "haptic/wire_protocol.hpp"

namespace haptic {

struct RegistryServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 4210;
    std::chrono::milliseconds idle_timeout{5000};
    bool relay_mode = false;  // forward CollisionEvents to the target device
};

// The central server: accepts device registrations and answers lookups so
// world clients can open direct per-event connections to devices. Per-connection
// faults never touch the accept loop.
class RegistryServer {
public:
    explicit RegistryServer(RegistryServerOptions opts = {})
        : opts_(std::move(opts)), listener_(opts_.host, opts_.port) {
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~RegistryServer() { stop(); }

    std::uint16_t port() const { return listener_.port(); }

    void stop() {
        bool was_running = !stopping_.exchange(true);
        if (!was_running) return;
        listener_.close();
        if (accept_thread_.joinable()) accept_thread_.join();
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(mu_);
            workers.swap(workers_);
        }
        for (auto& t : workers)
            if (t.joinable()) t.join();
    }

    Registry snapshot() const {
        std::lock_guard lock(mu_);
        return registry_;
    }

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

    void serve_connection(TcpConn conn) {
        using clock = std::chrono::steady_clock;
        conn.set_timeouts(std::chrono::milliseconds(2000));
        while (!stopping_) {
            // Idle wait in short slices so stop() is responsive.
            auto idle_deadline = clock::now() + opts_.idle_timeout;
            bool readable = false;
            while (!stopping_ && clock::now() < idle_deadline) {
                pollfd pfd{conn.fd(), POLLIN, 0};
                if (::poll(&pfd, 1, 100) > 0) {
                    readable = true;
                    break;
                }
            }
            if (!readable) return;
            auto res = read_message(conn);
            if (!res.ok()) {
                if (res.error() == DecodeError::Truncated) return;  // EOF or stalled frame
                // Malformed framing: answer with status MALFORMED and drop the peer.
                write_message(conn, Message{RegisterAck{Status::Malformed}});
                return;
            }
            if (!dispatch(conn, res.value())) return;
        }
    }

    // Returns false when the connection should close.
    bool dispatch(TcpConn& conn, const Message& msg) {
        if (const auto* reg = std::get_if<Register>(&msg)) {
            RegisterAck ack{};
            {
                std::lock_guard lock(mu_);
                ack = registry_.handle_register(*reg, now_ms());
            }
            return write_message(conn, Message{ack});
        }
        if (const auto* look = std::get_if<Lookup>(&msg)) {
            LookupResp resp{};
            {
                std::lock_guard lock(mu_);
                resp = registry_.handle_lookup(*look);
            }
            return write_message(conn, Message{resp});
        }
        if (const auto* ev = std::get_if<CollisionEvent>(&msg)) {
            if (opts_.relay_mode) return relay_event(conn, *ev);
            write_message(conn, Message{RegisterAck{Status::Malformed}});
            return false;
        }
        // Acks and responses are never requests.
        write_message(conn, Message{RegisterAck{Status::Malformed}});
        return false;
    }

    bool relay_event(TcpConn& conn, const CollisionEvent& ev) {
        LookupResp target{};
        {
            std::lock_guard lock(mu_);
            target = registry_.handle_lookup(Lookup{ev.target_user});
        }
        if (target.status != Status::Ok)
            return write_message(conn, Message{EventAck{ev.seq, Status::NotFound}});
        try {
            auto device = TcpConn::connect(target.ipv4.to_string(), target.port,
                                           std::chrono::milliseconds(500));
            if (!write_message(device, Message{ev}))
                return write_message(conn, Message{EventAck{ev.seq, Status::NotFound}});
            auto ack = read_message(device);
            if (ack.ok() && std::holds_alternative<EventAck>(ack.value()))
                return write_message(conn, ack.value());
        } catch (const std::runtime_error&) {
        }
        return write_message(conn, Message{EventAck{ev.seq, Status::NotFound}});
    }

    static std::int64_t now_ms() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }

    RegistryServerOptions opts_;
    TcpListener listener_;
    std::thread accept_thread_;
    mutable std::mutex mu_;
    Registry registry_;
    std::vector<std::thread> workers_;
    std::atomic<bool> stopping_{false};
};

}  // namespace haptic
