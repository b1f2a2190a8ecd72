// Command-line front end: scenario runs, the standalone registry and device
// processes, the synthetic benchmark, and the built-in red-cube demo.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "haptic/device.hpp"
#include "haptic/relay_server.hpp"
#include "haptic/runner.hpp"
#include "haptic/scenario.hpp"

namespace {

std::atomic<bool> g_shutdown{false};

void on_signal(int) { g_shutdown = true; }

void wait_for_signal() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void print_summary(const haptic::RunReport& report) {
    const auto& c = report.counters;
    std::cout << "events=" << c.events << " ok=" << c.oks << " rejected=" << c.rejects
              << " malformed=" << c.malformed << " timeout=" << c.timeouts
              << " not_found=" << c.not_found << "\n";
    if (report.latency.count > 0) {
        std::cout << "latency actuated-detected (ms): min=" << report.latency.min_ms
                  << " mean=" << report.latency.mean_ms << " p50=" << report.latency.p50_ms
                  << " p95=" << report.latency.p95_ms << " p99=" << report.latency.p99_ms
                  << " max=" << report.latency.max_ms << "\n";
    }
    for (const auto& [user, records] : report.timelines)
        std::cout << "device " << static_cast<int>(user) << ": " << records.size()
                  << " actuation(s)\n";
}

void write_report(const haptic::RunReport& report, const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << haptic::report_to_json(report).dump(2) << "\n";
    std::cout << "report written to " << path << "\n";
}

haptic::RunOptions parse_run_options(const std::string& mode, const std::string& registry,
                                     std::uint64_t seed) {
    haptic::RunOptions opts;
    opts.mode = mode == "relay" ? haptic::RoutingMode::Relay : haptic::RoutingMode::Direct;
    opts.seed = seed;
    if (!registry.empty()) {
        auto colon = registry.rfind(':');
        if (colon == std::string::npos)
            throw std::runtime_error("--registry expects host:port");
        opts.registry_host = registry.substr(0, colon);
        opts.registry_port = static_cast<std::uint16_t>(std::stoi(registry.substr(colon + 1)));
    }
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VR haptic feedback pipeline: collision detection, event routing, device emulation"};
    app.require_subcommand(1);

    // run <scenario.json>
    std::string scenario_path, run_mode = "direct", run_registry, run_report_path;
    std::uint64_t run_seed = 0;
    auto* run_cmd = app.add_subcommand("run", "run a scenario file end to end");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run_cmd->add_option("--mode", run_mode, "direct|relay")->check(CLI::IsMember({"direct", "relay"}));
    run_cmd->add_option("--registry", run_registry, "external registry host:port (default: in-process)");
    run_cmd->add_option("--report", run_report_path, "write the run report JSON here");
    run_cmd->add_option("--seed", run_seed, "RNG seed");

    // serve-registry
    std::uint16_t registry_port = 4210;
    bool registry_relay = false;
    auto* registry_cmd = app.add_subcommand("serve-registry", "run the central registry server");
    registry_cmd->add_option("--port", registry_port, "listen port (default 4210)");
    registry_cmd->add_flag("--relay", registry_relay, "also forward collision events to devices");

    // device
    int device_user = 0;
    std::uint16_t device_port = 0;
    std::string device_config_path, device_server = "127.0.0.1:4210", device_log_path;
    bool no_register = false;
    auto* device_cmd = app.add_subcommand("device", "run one emulated haptic device");
    device_cmd->add_option("--user-id", device_user, "user id 1..200");
    device_cmd->add_option("--port", device_port, "listen port (default 4210 + user id)");
    device_cmd->add_option("--config", device_config_path, "device config JSON");
    device_cmd->add_option("--server", device_server, "registry host:port");
    device_cmd->add_option("--log", device_log_path, "write the event log here on shutdown");
    device_cmd->add_flag("--no-register", no_register, "skip registry registration");

    // bench
    haptic::BenchOptions bench_opts;
    std::string bench_mode = "direct", bench_report_path;
    auto* bench_cmd = app.add_subcommand("bench", "synthetic event-rate benchmark");
    bench_cmd->add_option("--avatars", bench_opts.avatars, "number of emulated devices");
    bench_cmd->add_option("--rate", bench_opts.rate_per_s, "events per second");
    bench_cmd->add_option("--duration", bench_opts.duration_s, "seconds");
    bench_cmd->add_option("--mode", bench_mode, "direct|relay")->check(CLI::IsMember({"direct", "relay"}));
    bench_cmd->add_flag("--keep-alive", bench_opts.keep_alive, "reuse one connection per device");
    bench_cmd->add_option("--seed", bench_opts.seed, "RNG seed");
    bench_cmd->add_option("--report", bench_report_path, "write the report JSON here");

    // demo-red-cube
    std::string demo_report_path;
    auto* demo_cmd = app.add_subcommand("demo-red-cube", "built-in single-user grab-the-cube scenario");
    demo_cmd->add_option("--report", demo_report_path, "write the run report JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            auto scenario = haptic::load_scenario(scenario_path);
            auto report = haptic::run(scenario, parse_run_options(run_mode, run_registry, run_seed));
            print_summary(report);
            write_report(report, run_report_path);
        } else if (*registry_cmd) {
            haptic::RegistryServerOptions opts;
            opts.host = "0.0.0.0";
            opts.port = registry_port;
            opts.relay_mode = registry_relay;
            haptic::RegistryServer server(opts);
            std::cout << "registry listening on port " << server.port()
                      << (registry_relay ? " (relay mode)" : "") << "\n";
            wait_for_signal();
            server.stop();
        } else if (*device_cmd) {
            haptic::DeviceConfig cfg;
            if (!device_config_path.empty()) cfg = haptic::load_device_config(device_config_path);
            if (device_user != 0) cfg.user_id = static_cast<std::uint8_t>(device_user);
            if (device_port != 0) cfg.listen_port = device_port;
            auto colon = device_server.rfind(':');
            if (colon == std::string::npos) throw std::runtime_error("--server expects host:port");
            cfg.server_host = device_server.substr(0, colon);
            cfg.server_port = static_cast<std::uint16_t>(std::stoi(device_server.substr(colon + 1)));
            haptic::DeviceEmulator device(cfg);
            if (!no_register) {
                std::string err;
                if (!device.register_with_server(&err)) {
                    std::cerr << "error: " << err << "\n";
                    return 1;
                }
            }
            std::cout << "device user " << static_cast<int>(cfg.user_id) << " listening on port "
                      << device.port() << "\n";
            wait_for_signal();
            device.stop();
            std::ostream* log_out = &std::cout;
            std::ofstream log_file;
            if (!device_log_path.empty()) {
                log_file.open(device_log_path);
                log_out = &log_file;
            }
            for (const auto& line : device.event_log()) *log_out << line << "\n";
        } else if (*bench_cmd) {
            bench_opts.mode =
                bench_mode == "relay" ? haptic::RoutingMode::Relay : haptic::RoutingMode::Direct;
            auto report = haptic::bench(bench_opts);
            print_summary(report);
            std::cout << "achieved " << report.achieved_events_per_s << " events/s\n";
            write_report(report, bench_report_path);
        } else if (*demo_cmd) {
            auto report = haptic::run(haptic::red_cube_scenario());
            print_summary(report);
            write_report(report, demo_report_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
