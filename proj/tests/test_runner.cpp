#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "haptic/runner.hpp"

using namespace haptic;

TEST_CASE("latency_stats: singleton and 1..100") {
    auto one = latency_stats({10});
    CHECK(one.p50_ms == 10);
    CHECK(one.p99_ms == 10);

    std::vector<double> deltas;
    for (int i = 1; i <= 100; ++i) deltas.push_back(i);
    auto s = latency_stats(deltas);
    CHECK(s.p50_ms == 50);
    CHECK(s.p99_ms == 99);
    CHECK(s.min_ms == 1);
    CHECK(s.max_ms == 100);
    CHECK(s.mean_ms == Catch::Approx(50.5));
}

TEST_CASE("latency_stats: empty input gives an explicit empty summary") {
    auto s = latency_stats({});
    CHECK(s.count == 0);
    CHECK(s.p99_ms == 0);
}

TEST_CASE("latency_stats matches an independent sort-and-index oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 200;
        std::vector<double> deltas(n);
        for (auto& d : deltas) d = static_cast<double>(rng() % 10000) / 10.0;

        auto s = latency_stats(deltas);

        std::vector<double> sorted = deltas;
        std::sort(sorted.begin(), sorted.end());
        auto nearest_rank = [&](double p) {
            std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
            return sorted[std::max<std::size_t>(rank, 1) - 1];
        };
        CHECK(s.p50_ms == nearest_rank(50));
        CHECK(s.p95_ms == nearest_rank(95));
        CHECK(s.p99_ms == nearest_rank(99));
        CHECK(s.min_ms == sorted.front());
        CHECK(s.max_ms == sorted.back());
    }
}

TEST_CASE("run: red cube gives one OK event and one actuation") {
    auto report = run(red_cube_scenario());
    CHECK(report.counters.events == 1);
    CHECK(report.counters.oks == 1);
    REQUIRE(report.traces.size() == 1);
    CHECK(report.traces[0].body_part == BodyPart::RightHand);
    CHECK(report.traces[0].target_user == 1);
    REQUIRE(report.timelines.at(1).size() == 1);
    CHECK(report.timelines.at(1)[0].motor_channel == 5);
}

TEST_CASE("run: trace ordering invariant") {
    auto report = run(red_cube_scenario());
    for (const auto& t : report.traces) {
        if (t.outcome != EventOutcome::Ok) continue;
        CHECK(t.detected_ms <= t.sent_ms);
        REQUIRE(t.acked_ms.has_value());
        CHECK(t.sent_ms <= *t.acked_ms);
        REQUIRE(t.actuated_ms.has_value());
        CHECK(*t.actuated_ms >= t.sent_ms);
    }
}

TEST_CASE("run: same seed gives identical event sequences") {
    RunOptions opts;
    opts.realtime = false;
    auto a = run(two_avatar_touch_scenario(), opts);
    auto b = run(two_avatar_touch_scenario(), opts);
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        CHECK(a.traces[i].seq == b.traces[i].seq);
        CHECK(a.traces[i].tick == b.traces[i].tick);
        CHECK(a.traces[i].target_user == b.traces[i].target_user);
        CHECK(a.traces[i].body_part == b.traces[i].body_part);
        CHECK(a.traces[i].source == b.traces[i].source);
    }
}

TEST_CASE("run: conservation of outcome counters") {
    RunOptions opts;
    opts.realtime = false;
    auto report = run(two_avatar_touch_scenario(), opts);
    CHECK(report.counters.events == report.counters.oks + report.counters.rejects +
                                        report.counters.malformed + report.counters.timeouts +
                                        report.counters.not_found);
}

TEST_CASE("run: relay mode routes through the server") {
    RunOptions opts;
    opts.mode = RoutingMode::Relay;
    opts.realtime = false;
    auto report = run(red_cube_scenario(), opts);
    CHECK(report.counters.oks == 1);
    CHECK(report.timelines.at(1).size() == 1);
}

TEST_CASE("bench: zero duration yields an empty report") {
    BenchOptions opts;
    opts.duration_s = 0;
    auto report = bench(opts);
    CHECK(report.counters.events == 0);
    CHECK(report.latency.count == 0);
}

TEST_CASE("bench: rate times duration events attempted") {
    BenchOptions opts;
    opts.avatars = 2;
    opts.rate_per_s = 50;
    opts.duration_s = 2;
    auto report = bench(opts);
    CHECK(report.counters.events >= 99);
    CHECK(report.counters.events <= 101);
    CHECK(report.counters.oks == report.counters.events);
}

TEST_CASE("bench: keep-alive works and reuses connections") {
    BenchOptions opts;
    opts.avatars = 2;
    opts.rate_per_s = 50;
    opts.duration_s = 1;
    opts.keep_alive = true;
    auto report = bench(opts);
    CHECK(report.counters.oks == report.counters.events);
    CHECK(report.latency.count > 0);
}

TEST_CASE("report json contains counters, latency, traces, timelines") {
    RunOptions opts;
    opts.realtime = false;
    auto report = run(red_cube_scenario(), opts);
    auto j = report_to_json(report);
    CHECK(j["counters"]["oks"] == 1);
    CHECK(j["traces"].size() == 1);
    CHECK(j["timelines"].contains("1"));
    CHECK(j["latency_ms"].contains("p99"));
}
