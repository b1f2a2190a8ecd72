#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "haptic/collision.hpp"
#include "haptic/device.hpp"
#include "haptic/net.hpp"
#include "haptic/relay_server.hpp"
#include "haptic/scenario.hpp"
#include "haptic/wire_protocol.hpp"

namespace haptic {

struct LatencySummary {
    std::size_t count = 0;
    double min_ms = 0, mean_ms = 0, p50_ms = 0, p95_ms = 0, p99_ms = 0, max_ms = 0;
};

// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1].
inline double percentile_nearest_rank(const std::vector<double>& sorted, double p) {
    std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    if (rank == 0) rank = 1;
    return sorted[rank - 1];
}

inline LatencySummary latency_stats(std::vector<double> deltas_ms) {
    LatencySummary s;
    if (deltas_ms.empty()) return s;
    std::sort(deltas_ms.begin(), deltas_ms.end());
    s.count = deltas_ms.size();
    s.min_ms = deltas_ms.front();
    s.max_ms = deltas_ms.back();
    double sum = 0;
    for (double d : deltas_ms) sum += d;
    s.mean_ms = sum / static_cast<double>(deltas_ms.size());
    s.p50_ms = percentile_nearest_rank(deltas_ms, 50);
    s.p95_ms = percentile_nearest_rank(deltas_ms, 95);
    s.p99_ms = percentile_nearest_rank(deltas_ms, 99);
    return s;
}

enum class EventOutcome { Ok, Rejected, Malformed, Timeout, NotFound };

inline const char* outcome_name(EventOutcome o) {
    switch (o) {
        case EventOutcome::Ok: return "ok";
        case EventOutcome::Rejected: return "rejected";
        case EventOutcome::Malformed: return "malformed";
        case EventOutcome::Timeout: return "timeout";
        case EventOutcome::NotFound: return "not_found";
    }
    return "?";
}

struct EventTrace {
    std::uint16_t seq = 0;
    std::int64_t tick = 0;
    std::uint8_t target_user = 0;
    BodyPart body_part = BodyPart::Head;
    std::string source;
    double detected_ms = 0;
    double sent_ms = 0;
    std::optional<double> acked_ms;
    std::optional<double> actuated_ms;
    EventOutcome outcome = EventOutcome::Ok;
};

struct RunCounters {
    std::uint64_t events = 0;
    std::uint64_t oks = 0;
    std::uint64_t rejects = 0;
    std::uint64_t malformed = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t not_found = 0;
};

struct RunReport {
    std::vector<EventTrace> traces;
    std::map<std::uint8_t, std::vector<ActuationRecord>> timelines;
    std::map<std::uint8_t, DeviceCounters> device_counters;
    std::vector<std::string> device_logs;
    LatencySummary latency;
    RunCounters counters;
    double wall_ms = 0;
    double achieved_events_per_s = 0;
};

struct FaultOptions {
    double garbage_prob = 0.0;   // replace the event bytes with garbage
    double drop_ack_prob = 0.0;  // deliver the event but discard the ack
};

enum class RoutingMode { Direct, Relay };

struct RunOptions {
    RoutingMode mode = RoutingMode::Direct;
    std::optional<std::string> registry_host;  // unset = spawn in-process
    std::uint16_t registry_port = 4210;
    std::uint64_t seed = 0;
    FaultOptions faults;
    std::chrono::milliseconds ack_timeout{250};
    bool realtime = true;  // pace ticks on the wall clock
    // Spawn devices only for these users (default: every scenario user).
    std::optional<std::vector<std::uint8_t>> device_users;
};

namespace detail {

struct CachedAddr {
    std::string host;
    std::uint16_t port;
};

// Resolves devices through the registry, caching successes.
class AddressCache {
public:
    AddressCache(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}

    std::optional<CachedAddr> resolve(std::uint8_t user_id) {
        auto it = cache_.find(user_id);
        if (it != cache_.end()) return it->second;
        try {
            auto conn = TcpConn::connect(host_, port_, std::chrono::milliseconds(1000));
            if (!write_message(conn, Message{Lookup{user_id}})) return std::nullopt;
            auto resp = read_message(conn);
            if (!resp.ok()) return std::nullopt;
            const auto* lr = std::get_if<LookupResp>(&resp.value());
            if (!lr || lr->status != Status::Ok) return std::nullopt;
            CachedAddr addr{lr->ipv4.to_string(), lr->port};
            cache_.emplace(user_id, addr);
            return addr;
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
    }

    void invalidate(std::uint8_t user_id) { cache_.erase(user_id); }

private:
    std::string host_;
    std::uint16_t port_;
    std::map<std::uint8_t, CachedAddr> cache_;
};

}  // namespace detail

// Delivers one event and classifies the outcome. Fault injection lives here,
// in the sender's connection layer, so server and device code stay clean.
class EventSender {
public:
    EventSender(RoutingMode mode, detail::AddressCache& cache, std::string registry_host,
                std::uint16_t registry_port, std::chrono::milliseconds ack_timeout,
                FaultOptions faults, std::mt19937_64& rng)
        : mode_(mode),
          cache_(cache),
          registry_host_(std::move(registry_host)),
          registry_port_(registry_port),
          ack_timeout_(ack_timeout),
          faults_(faults),
          rng_(rng) {}

    struct SendResult {
        EventOutcome outcome;
        std::optional<double> acked_ms;
    };

    SendResult send(const CollisionEvent& ev, const RunClock& clock) {
        std::string host;
        std::uint16_t port;
        if (mode_ == RoutingMode::Relay) {
            host = registry_host_;
            port = registry_port_;
        } else {
            auto addr = cache_.resolve(ev.target_user);
            if (!addr) return {EventOutcome::NotFound, std::nullopt};
            host = addr->host;
            port = addr->port;
        }

        const bool inject_garbage = chance(faults_.garbage_prob);
        const bool drop_ack = !inject_garbage && chance(faults_.drop_ack_prob);

        try {
            auto conn = TcpConn::connect(host, port, ack_timeout_);
            if (inject_garbage) {
                std::array<std::uint8_t, 16> junk;
                for (auto& b : junk) b = static_cast<std::uint8_t>(rng_());
                junk[0] = kFrameMagic;  // valid-looking header so the peer reads a full frame
                junk[1] = 0x10;
                junk[2] = 0x00;
                junk[3] = 0x0B;
                conn.send_all(junk);
                read_message(conn);  // peer answers MALFORMED and closes
                return {EventOutcome::Malformed, std::nullopt};
            }
            if (!write_message(conn, Message{ev})) {
                if (mode_ == RoutingMode::Direct) cache_.invalidate(ev.target_user);
                return {EventOutcome::Timeout, std::nullopt};
            }
            if (drop_ack) return {EventOutcome::Timeout, std::nullopt};
            auto resp = read_message(conn);
            if (!resp.ok()) return {EventOutcome::Timeout, std::nullopt};
            const auto* ack = std::get_if<EventAck>(&resp.value());
            if (!ack) return {EventOutcome::Malformed, std::nullopt};
            double acked = clock.now_ms();
            switch (ack->status) {
                case Status::Ok: return {EventOutcome::Ok, acked};
                case Status::RejectedWrongUser: return {EventOutcome::Rejected, acked};
                case Status::NotFound: return {EventOutcome::NotFound, acked};
                default: return {EventOutcome::Malformed, acked};
            }
        } catch (const std::runtime_error&) {
            if (mode_ == RoutingMode::Direct) cache_.invalidate(ev.target_user);
            return {EventOutcome::Timeout, std::nullopt};
        }
    }

private:
    bool chance(double p) {
        if (p <= 0.0) return false;
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
    }

    RoutingMode mode_;
    detail::AddressCache& cache_;
    std::string registry_host_;
    std::uint16_t registry_port_;
    std::chrono::milliseconds ack_timeout_;
    FaultOptions faults_;
    std::mt19937_64& rng_;
};

namespace detail {

inline void join_actuations(RunReport& report) {
    std::map<std::uint16_t, double> actuated_by_seq;
    for (const auto& [user, records] : report.timelines)
        for (const auto& r : records) actuated_by_seq.emplace(r.seq, r.start_ms);
    std::vector<double> deltas;
    for (auto& t : report.traces) {
        auto it = actuated_by_seq.find(t.seq);
        if (it != actuated_by_seq.end()) {
            t.actuated_ms = it->second;
            if (t.outcome == EventOutcome::Ok) deltas.push_back(it->second - t.detected_ms);
        }
    }
    report.latency = latency_stats(std::move(deltas));
}

}  // namespace detail

// Full pipeline for one scenario: tick loop -> collision detection ->
// debounce -> lookup + per-event delivery -> report join. Devices and
// (unless an external one is given) the registry run in-process over
// loopback TCP, speaking the same wire protocol as external peers.
inline RunReport run(const Scenario& scenario, const RunOptions& options = {}) {
    scenario.validate();

    auto clock = std::make_shared<RunClock>();
    std::unique_ptr<RegistryServer> own_registry;
    std::string registry_host;
    std::uint16_t registry_port;
    if (options.registry_host) {
        registry_host = *options.registry_host;
        registry_port = options.registry_port;
    } else {
        RegistryServerOptions ropts;
        ropts.port = 0;  // ephemeral
        ropts.relay_mode = options.mode == RoutingMode::Relay;
        own_registry = std::make_unique<RegistryServer>(ropts);
        registry_host = "127.0.0.1";
        registry_port = own_registry->port();
    }

    std::vector<std::unique_ptr<DeviceEmulator>> devices;
    for (const auto& u : scenario.users) {
        if (options.device_users &&
            std::find(options.device_users->begin(), options.device_users->end(), u.user_id) ==
                options.device_users->end())
            continue;
        DeviceConfig cfg;
        cfg.user_id = u.user_id;
        cfg.ephemeral_port = true;
        cfg.server_host = registry_host;
        cfg.server_port = registry_port;
        devices.push_back(std::make_unique<DeviceEmulator>(cfg, clock));
    }
    for (auto& d : devices) {
        std::string err;
        if (!d->register_with_server(&err)) throw std::runtime_error("device registration: " + err);
    }

    std::mt19937_64 rng(options.seed);
    detail::AddressCache cache(registry_host, registry_port);
    EventSender sender(options.mode, cache, registry_host, registry_port, options.ack_timeout,
                       options.faults, rng);

    RunReport report;
    DebounceState debounce;
    std::uint16_t next_seq = 1;
    const double tick_dt_ms = 1000.0 / scenario.tick_hz;
    const auto epoch = std::chrono::steady_clock::now();
    const std::int64_t ticks = static_cast<std::int64_t>(
        std::floor(static_cast<double>(scenario.duration_ms) / tick_dt_ms)) + 1;

    for (std::int64_t tick = 0; tick < ticks; ++tick) {
        const std::int64_t t_ms = static_cast<std::int64_t>(std::llround(tick * tick_dt_ms));
        if (options.realtime)
            std::this_thread::sleep_until(epoch + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                      std::chrono::duration<double, std::milli>(tick * tick_dt_ms)));
        WorldState world = sample_world(scenario, t_ms);
        auto contacts = detect_contacts(world, scenario.radii);
        auto events = debounce.step(contacts, tick, scenario.repeat_every);

        for (const Contact& c : events) {
            CollisionEvent ev{c.target_user, c.target_part,
                              c.source.is_object() ? kObjectSourceId : c.source.user_id, next_seq++};
            EventTrace trace;
            trace.seq = ev.seq;
            trace.tick = tick;
            trace.target_user = ev.target_user;
            trace.body_part = ev.body_part;
            trace.source = c.source.to_string();
            trace.detected_ms = clock->now_ms();
            trace.sent_ms = clock->now_ms();
            auto result = sender.send(ev, *clock);
            trace.outcome = result.outcome;
            trace.acked_ms = result.acked_ms;
            report.counters.events++;
            switch (result.outcome) {
                case EventOutcome::Ok: report.counters.oks++; break;
                case EventOutcome::Rejected: report.counters.rejects++; break;
                case EventOutcome::Malformed: report.counters.malformed++; break;
                case EventOutcome::Timeout: report.counters.timeouts++; break;
                case EventOutcome::NotFound: report.counters.not_found++; break;
            }
            report.traces.push_back(std::move(trace));
        }
    }

    for (auto& d : devices) d->drain();
    for (auto& d : devices) {
        report.timelines[d->user_id()] = d->timeline();
        report.device_counters[d->user_id()] = d->counters();
        for (auto& line : d->event_log()) report.device_logs.push_back(line);
    }
    report.wall_ms = clock->now_ms();
    if (report.wall_ms > 0)
        report.achieved_events_per_s = 1000.0 * static_cast<double>(report.counters.events) / report.wall_ms;
    detail::join_actuations(report);

    for (auto& d : devices) d->stop();
    if (own_registry) own_registry->stop();
    return report;
}

struct BenchOptions {
    int avatars = 2;
    double rate_per_s = 10.0;
    double duration_s = 10.0;
    RoutingMode mode = RoutingMode::Direct;
    bool keep_alive = false;
    std::uint64_t seed = 0;
    std::chrono::milliseconds ack_timeout{250};
};

// Synthetic event load bypassing collision detection. With keep_alive, one
// connection per device is reused for every event instead of a fresh
// connect per event.
inline RunReport bench(const BenchOptions& options) {
    RunReport report;
    if (options.duration_s <= 0 || options.rate_per_s <= 0) return report;
    if (options.avatars < 1 || options.avatars > kMaxUserId)
        throw std::invalid_argument("bench avatars out of 1..200");

    auto clock = std::make_shared<RunClock>();
    RegistryServerOptions ropts;
    ropts.port = 0;
    ropts.relay_mode = options.mode == RoutingMode::Relay;
    RegistryServer registry(ropts);

    std::vector<std::unique_ptr<DeviceEmulator>> devices;
    for (int i = 0; i < options.avatars; ++i) {
        DeviceConfig cfg;
        cfg.user_id = static_cast<std::uint8_t>(i + 1);
        cfg.ephemeral_port = true;
        cfg.server_host = "127.0.0.1";
        cfg.server_port = registry.port();
        devices.push_back(std::make_unique<DeviceEmulator>(cfg, clock));
        std::string err;
        if (!devices.back()->register_with_server(&err))
            throw std::runtime_error("bench device registration: " + err);
    }

    std::mt19937_64 rng(options.seed);
    detail::AddressCache cache("127.0.0.1", registry.port());
    std::map<std::uint8_t, TcpConn> persistent;

    const std::int64_t total = static_cast<std::int64_t>(options.rate_per_s * options.duration_s);
    const double interval_ms = 1000.0 / options.rate_per_s;
    const auto epoch = std::chrono::steady_clock::now();
    std::uint16_t next_seq = 1;

    for (std::int64_t i = 0; i < total; ++i) {
        std::this_thread::sleep_until(
            epoch + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double, std::milli>(i * interval_ms)));
        const std::uint8_t target = static_cast<std::uint8_t>((i % options.avatars) + 1);
        const BodyPart part = static_cast<BodyPart>(rng() % kBodyPartCount);
        CollisionEvent ev{target, part, kObjectSourceId, next_seq++};

        EventTrace trace;
        trace.seq = ev.seq;
        trace.tick = i;
        trace.target_user = target;
        trace.body_part = part;
        trace.source = "bench";
        trace.detected_ms = clock->now_ms();
        trace.sent_ms = trace.detected_ms;

        EventOutcome outcome = EventOutcome::Timeout;
        std::optional<double> acked;
        try {
            TcpConn* conn = nullptr;
            TcpConn fresh;
            if (options.mode == RoutingMode::Relay) {
                fresh = TcpConn::connect("127.0.0.1", registry.port(), options.ack_timeout);
                conn = &fresh;
            } else if (options.keep_alive) {
                auto it = persistent.find(target);
                if (it == persistent.end() || !it->second.valid()) {
                    auto addr = cache.resolve(target);
                    if (addr) {
                        persistent[target] =
                            TcpConn::connect(addr->host, addr->port, options.ack_timeout);
                        it = persistent.find(target);
                    }
                }
                if (it != persistent.end()) conn = &it->second;
            } else {
                auto addr = cache.resolve(target);
                if (addr) {
                    fresh = TcpConn::connect(addr->host, addr->port, options.ack_timeout);
                    conn = &fresh;
                }
            }
            if (!conn) {
                outcome = EventOutcome::NotFound;
            } else if (write_message(*conn, Message{ev})) {
                auto resp = read_message(*conn);
                if (resp.ok()) {
                    if (const auto* ack = std::get_if<EventAck>(&resp.value())) {
                        acked = clock->now_ms();
                        outcome = ack->status == Status::Ok ? EventOutcome::Ok
                                                            : EventOutcome::Rejected;
                    }
                }
            }
        } catch (const std::runtime_error&) {
            persistent.erase(target);
        }
        trace.outcome = outcome;
        trace.acked_ms = acked;
        report.counters.events++;
        switch (outcome) {
            case EventOutcome::Ok: report.counters.oks++; break;
            case EventOutcome::Rejected: report.counters.rejects++; break;
            case EventOutcome::Malformed: report.counters.malformed++; break;
            case EventOutcome::Timeout: report.counters.timeouts++; break;
            case EventOutcome::NotFound: report.counters.not_found++; break;
        }
        report.traces.push_back(std::move(trace));
    }

    persistent.clear();
    for (auto& d : devices) d->drain();
    for (auto& d : devices) {
        report.timelines[d->user_id()] = d->timeline();
        report.device_counters[d->user_id()] = d->counters();
    }
    report.wall_ms = clock->now_ms();
    if (report.wall_ms > 0)
        report.achieved_events_per_s = 1000.0 * static_cast<double>(report.counters.events) / report.wall_ms;
    detail::join_actuations(report);
    for (auto& d : devices) d->stop();
    registry.stop();
    return report;
}

inline nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["counters"] = {{"events", report.counters.events},   {"oks", report.counters.oks},
                     {"rejects", report.counters.rejects}, {"malformed", report.counters.malformed},
                     {"timeouts", report.counters.timeouts}, {"not_found", report.counters.not_found}};
    j["latency_ms"] = {{"count", report.latency.count}, {"min", report.latency.min_ms},
                       {"mean", report.latency.mean_ms}, {"p50", report.latency.p50_ms},
                       {"p95", report.latency.p95_ms},   {"p99", report.latency.p99_ms},
                       {"max", report.latency.max_ms}};
    j["wall_ms"] = report.wall_ms;
    j["events_per_s"] = report.achieved_events_per_s;
    j["traces"] = nlohmann::json::array();
    for (const auto& t : report.traces) {
        nlohmann::json tj = {{"seq", t.seq},
                             {"tick", t.tick},
                             {"target_user", t.target_user},
                             {"body_part", body_part_name(t.body_part)},
                             {"source", t.source},
                             {"detected_ms", t.detected_ms},
                             {"sent_ms", t.sent_ms},
                             {"status", outcome_name(t.outcome)}};
        if (t.acked_ms) tj["acked_ms"] = *t.acked_ms;
        if (t.actuated_ms) tj["actuated_ms"] = *t.actuated_ms;
        j["traces"].push_back(std::move(tj));
    }
    j["timelines"] = nlohmann::json::object();
    for (const auto& [user, records] : report.timelines) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records)
            arr.push_back({{"channel", r.motor_channel},
                           {"start_ms", r.start_ms},
                           {"end_ms", r.end_ms},
                           {"seq", r.seq}});
        j["timelines"][std::to_string(user)] = std::move(arr);
    }
    j["device_logs"] = report.device_logs;
    return j;
}

}  // namespace haptic
