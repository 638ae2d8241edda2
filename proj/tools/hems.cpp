// hems: run the weekly experiment, check the built-in fixtures, replay a
// record log, or serve the live home over HTTP.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "hems/experiment.hpp"
#include "hems/gateway.hpp"
#include "hems/replay.hpp"
#include "hems/verify.hpp"

namespace fs = std::filesystem;
using namespace hems;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
    std::string config;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<double> tick_seconds;
};

experiment::ExperimentConfig load(const Common& c) {
    auto cfg = c.config.empty() ? experiment::default_fixture() : experiment::load_config(c.config);
    if (!c.mode.empty()) cfg.mode = experiment::mode_from_string(c.mode);
    if (c.seed) cfg.seed = *c.seed;
    if (c.tick_seconds) {
        if (!(*c.tick_seconds > 0.0)) throw Error(Errc::Config, "tick_seconds: must be > 0");
        // Keep the simulated span and the report cadence in wall seconds.
        const double scale = cfg.tick_seconds / *c.tick_seconds;
        cfg.duration_ticks = static_cast<std::uint64_t>(std::llround(static_cast<double>(cfg.duration_ticks) * scale));
        cfg.report_interval_ticks =
            std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(cfg.report_interval_ticks) * scale)));
        cfg.tick_seconds = *c.tick_seconds;
    }
    experiment::validate(cfg);
    return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(Errc::StorageFailure, "cannot write " + p.string());
}

int cmd_run(const Common& common, const std::string& out_dir) {
    const auto cfg = load(common);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    const auto started = std::chrono::steady_clock::now();
    experiment::ExperimentResult result;
    {
        center::FileLog run_log((dir / "run.log").string());
        if (cfg.mode == experiment::Mode::Offline) {
            result = experiment::run_experiment(cfg, cfg.mode, cfg.seed, &run_log);
        } else {
            center::FileLog baseline_log((dir / "baseline.log").string());
            result = experiment::run_experiment(cfg, cfg.mode, cfg.seed, &run_log, &baseline_log);
            baseline_log.flush();
        }
        run_log.flush();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto table = profiles::render_table(result.report);
    write_file(dir / "report.txt", table);
    write_file(dir / "report.json", experiment::report_json(result));
    std::cout << table;
    std::fprintf(stderr, "mode %s, seed %llu, %llu ticks in %.2f s, reports in %s\n",
                 std::string(experiment::to_string(cfg.mode)).c_str(), static_cast<unsigned long long>(cfg.seed),
                 static_cast<unsigned long long>(cfg.duration_ticks), secs, out_dir.c_str());
    return 0;
}

struct VerifyFlags {
    std::optional<double> max_angle;
    std::optional<double> max_distance;
    std::vector<std::string> rssi_points;
};

int cmd_verify(const Common& common, const VerifyFlags& flags) {
    auto cfg = load(common);
    if (flags.max_angle) cfg.presence.max_angle_deg = *flags.max_angle;
    if (flags.max_distance) cfg.presence.max_distance_m = *flags.max_distance;
    for (const auto& spec : flags.rssi_points) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Error(Errc::Config, "--rssi-point: expected D=DBM, got '" + spec + "'");
        const double d = std::stod(spec.substr(0, eq));
        const double dbm = std::stod(spec.substr(eq + 1));
        bool found = false;
        for (auto& p : cfg.channel.calibration) {
            if (p.distance_m == d) {
                p.rssi_dbm = dbm;
                found = true;
            }
        }
        if (!found) throw Error(Errc::Config, "--rssi-point: no calibration point at " + spec.substr(0, eq) + " m");
    }

    std::vector<verify::Check> checks;
    checks.push_back(verify::presence_table(cfg.presence));
    checks.push_back(verify::rssi_points(cfg.channel));
    const auto result = experiment::run_experiment(cfg, experiment::Mode::OnlineCalibrated, cfg.seed);
    for (auto& c : verify::weekly(result)) checks.push_back(std::move(c));
    checks.push_back(verify::relay_safety(cfg));

    int failed = 0;
    for (const auto& c : checks) {
        std::cout << verify::format(c) << "\n";
        if (!c.pass) ++failed;
    }
    std::cout << (failed == 0 ? "all fixtures pass" : std::to_string(failed) + " fixture(s) failed") << "\n";
    return failed == 0 ? 0 : kExitFailure;
}

int cmd_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "replay: cannot read " << path << "\n";
        return kExitConfig;
    }
    center::ReplayResult r;
    try {
        r = center::replay_log(in);
    } catch (const Error& e) {
        std::cerr << "replay: " << path << ": " << e.what() << "\n";
        return kExitConfig;
    }
    const auto& s = r.state;
    std::printf("replayed %zu lines, %zu commands, final tick %llu\n", r.lines, r.commands.size(),
                static_cast<unsigned long long>(s.as_of.ticks));
    double total = 0.0;
    for (const auto& a : s.appliances) {
        std::printf("%-18s %-4s %10.3f W %14.6f kWh\n", a.name.c_str(),
                    a.state ? std::string(to_string(*a.state)).c_str() : "?", a.power_w, a.energy_kwh);
        total += a.energy_kwh;
    }
    std::printf("%-18s %-4s %12s %14.6f kWh\n", "total", "", "", total);
    const auto& e = s.environment;
    std::printf("temperature %s C, humidity %s %%, luminosity %s lux, presence %s\n",
                e.temperature_c ? std::to_string(*e.temperature_c).c_str() : "?",
                e.humidity_pct ? std::to_string(*e.humidity_pct).c_str() : "?",
                e.luminosity_lux ? std::to_string(*e.luminosity_lux).c_str() : "?",
                e.presence ? (*e.presence ? "yes" : "no") : "?");
    return 0;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int cmd_serve(const Common& common, const std::string& listen, double speedup) {
    const auto cfg = load(common);
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(Errc::Config, "--listen: expected HOST:PORT");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));
    if (!(speedup > 0.0)) throw Error(Errc::Config, "--speedup: must be > 0");

    center::NullSink sink;
    experiment::Simulation sim(cfg, {cfg.mode, cfg.seed, true}, sink);
    gateway::Gateway gw(sim.center(), cfg.tokens, [&cfg](experiment::Mode m) {
        return experiment::run_experiment(cfg, m, cfg.seed);
    });
    const int bound = gw.bind(host, port);
    std::thread http([&] { gw.listen_after_bind(); });
    std::fprintf(stderr, "serving on %s:%d, mode %s, %.1fx\n", host.c_str(), bound,
                 std::string(experiment::to_string(cfg.mode)).c_str(), speedup);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const double ticks_per_s = speedup / cfg.tick_seconds;
    while (!g_stop && sim.now().ticks < cfg.duration_ticks) {
        const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
        const auto due = static_cast<std::uint64_t>(elapsed * ticks_per_s) + 1;
        while (sim.now().ticks < due && sim.now().ticks < cfg.duration_ticks) sim.step();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    // The week is over; keep answering queries until told to stop.
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    gw.stop();
    http.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Home energy management simulator"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON); default is the built-in weekly fixture");
        sub->add_option("--mode", common.mode, "offline | online-calibrated | online-emergent");
        sub->add_option("--seed", common.seed, "RNG seed");
        sub->add_option("--tick-seconds", common.tick_seconds, "Simulated seconds per tick");
    };

    auto* run = app.add_subcommand("run", "Run the offline week and, for online modes, the HEMS week");
    add_common(run);
    std::string out_dir = "out";
    double speedup = 0.0;
    run->add_option("--out", out_dir, "Directory for report.txt, report.json and the record logs");
    run->add_option("--speedup", speedup, "Ignored by run; batch runs go as fast as possible");

    auto* ver = app.add_subcommand("verify", "Check the built-in fixtures");
    add_common(ver);
    VerifyFlags vflags;
    ver->add_option("--presence-max-angle", vflags.max_angle, "Override the presence cone half-angle (degrees)");
    ver->add_option("--presence-max-distance", vflags.max_distance, "Override the presence range (m)");
    ver->add_option("--rssi-point", vflags.rssi_points, "Override a calibration point, D=DBM");

    auto* rep = app.add_subcommand("replay", "Rebuild the final state from a record log");
    std::string log_path;
    rep->add_option("log", log_path, "Record log")->required();

    auto* srv = app.add_subcommand("serve", "Run the simulation live behind the HTTP gateway");
    add_common(srv);
    std::string listen = "127.0.0.1:8080";
    double serve_speedup = 60.0;
    srv->add_option("--listen", listen, "HOST:PORT");
    srv->add_option("--speedup", serve_speedup, "Simulated seconds per wall second");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(common, out_dir);
        if (*ver) return cmd_verify(common, vflags);
        if (*rep) return cmd_replay(log_path);
        if (*srv) return cmd_serve(common, listen, serve_speedup);
    } catch (const Error& e) {
        std::cerr << (e.code() == Errc::Config ? "config error: " : "error: ") << e.what() << "\n";
        return e.code() == Errc::Config ? kExitConfig : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
